use nalgebra::DMatrix;
use rand::Rng;

use super::{TrainConfig, TrainError};
use crate::gauss::{
    covariance_backward, covariance_from_unit, matrix_backward, mul_backward, normalize_backward, GaussianSplat, Mat3,
    Quaternion, Vec3,
};
use crate::raster::{render, render_backward, Camera, Image, RasterConfig, RenderCache, RenderGaussian, RenderOutput};
use crate::rectifier::{
    apply_deltas, apply_deltas_backward, ForwardCache, RectifiedGaussian, RectifierOutput, RectifierParams, OUTPUT_WIDTH,
};
use crate::rig::{bind_to_global, face_frames, pose_mesh, BoundGaussian, Pose, RiggedMesh, TriangleFrame};

/// The learnable avatar: mesh-bound splats plus the optional rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Avatar {
    pub splats: Vec<GaussianSplat>,
    pub rectifier: Option<RectifierParams>,
    pub sh_degree: usize,
}

/// Everything computed between the pose and the renderer for one frame.
#[derive(Debug, Clone)]
pub struct PosedAvatar {
    pub frames: Vec<TriangleFrame>,
    pub bound: Vec<BoundGaussian>,
    pub deltas: Vec<RectifierOutput>,
    pub rectified: Vec<RectifiedGaussian>,
    local_rotations: Vec<Quaternion>,
    rect_cache: Option<ForwardCache>,
    rotations: Vec<Mat3>,
    covariances: Vec<Mat3>,
}

/// Gradients of the frame loss, laid out like [`Avatar`].
#[derive(Debug, Clone)]
pub struct AvatarGrad {
    pub mu_local: Vec<Vec3>,
    pub rot_local: Vec<Quaternion>,
    pub log_scale: Vec<Vec3>,
    pub opacity_logit: Vec<f64>,
    pub sh: Vec<Vec<f64>>,
    pub rectifier: Option<RectifierParams>,
    /// `∂L/∂mean2d` in pixels for splats that were rendered.
    pub screen: Vec<Option<[f64; 2]>>,
}

impl Avatar {
    /// One splat per face at the local origin with identity rotation and
    /// unit scale. The rectifier head starts at zero.
    pub fn init<R: Rng>(mesh: &RiggedMesh, cfg: &TrainConfig, rng: &mut R) -> Self {
        let splats = (0..mesh.faces.len())
            .map(|f| GaussianSplat::at_face_origin(f, cfg.init.sh_degree, cfg.init.opacity))
            .collect();
        let rectifier = cfg.use_rectifier.then(|| RectifierParams::new(cfg.rectifier.clone(), rng));
        Self { splats, rectifier, sh_degree: cfg.init.sh_degree }
    }

    pub fn face_counts(&self, faces: usize) -> Vec<usize> {
        let mut counts = vec![0; faces];
        for s in &self.splats {
            counts[s.parent_face] += 1;
        }
        counts
    }

    /// Poses the mesh, binds every splat and applies the rectifier.
    pub fn pose(&self, mesh: &RiggedMesh, pose: &Pose) -> Result<PosedAvatar, TrainError> {
        let verts = pose_mesh(mesh, pose)?;
        let frames = face_frames(&mesh.faces, &verts)?;
        let mut bound = Vec::with_capacity(self.splats.len());
        let mut local_rotations = Vec::with_capacity(self.splats.len());
        for s in &self.splats {
            let frame = frames.get(s.parent_face).ok_or(TrainError::FaceIndex { face: s.parent_face })?;
            bound.push(bind_to_global(s, frame)?);
            local_rotations.push(s.rotation()?);
        }
        let (deltas, rectified, rect_cache): (Vec<RectifierOutput>, Vec<RectifiedGaussian>, _) = match &self.rectifier {
            Some(params) => {
                let mu: Vec<Vec3> = bound.iter().map(|b| b.mu).collect();
                let cache = params.forward_batch(&mu, &pose.body_pose_vector(params.config.pose_width))?;
                let deltas: Vec<RectifierOutput> =
                    (0..bound.len()).map(|j| RectifierOutput::from_column(cache.output.column(j).as_slice())).collect();
                let rectified = bound.iter().zip(&deltas).map(|(b, d)| apply_deltas(b, d)).collect();
                (deltas, rectified, Some(cache))
            }
            None => (
                vec![RectifierOutput::default(); bound.len()],
                bound.iter().map(RectifiedGaussian::unrectified).collect(),
                None,
            ),
        };
        let rotations: Vec<Mat3> = rectified.iter().map(|r: &RectifiedGaussian| r.rotation.unit_to_matrix()).collect();
        let covariances = rectified.iter().zip(&rotations).map(|(r, rot)| covariance_from_unit(rot, &r.scale)).collect();
        Ok(PosedAvatar { frames, bound, deltas, rectified, local_rotations, rect_cache, rotations, covariances })
    }

    fn render_inputs<'a>(&'a self, posed: &PosedAvatar) -> Vec<RenderGaussian<'a>> {
        self.splats
            .iter()
            .enumerate()
            .map(|(i, s)| RenderGaussian {
                mu: posed.rectified[i].mu,
                cov: posed.covariances[i],
                opacity: s.opacity(),
                sh: &s.sh_coeffs,
            })
            .collect()
    }

    pub fn render_posed(&self, posed: &PosedAvatar, cam: &Camera, cfg: &RasterConfig) -> (RenderOutput, RenderCache) {
        render(&self.render_inputs(posed), self.sh_degree, cam, cfg)
    }

    /// Poses and renders in one call.
    pub fn render(&self, mesh: &RiggedMesh, pose: &Pose, cam: &Camera, cfg: &RasterConfig) -> Result<RenderOutput, TrainError> {
        let posed = self.pose(mesh, pose)?;
        Ok(self.render_posed(&posed, cam, cfg).0)
    }

    /// Chains `d_image` and an extra gradient on the rectifier outputs back to
    /// every learnable parameter.
    pub fn backward(
        &self,
        posed: &PosedAvatar,
        cache: &RenderCache,
        cam: &Camera,
        cfg: &RasterConfig,
        d_image: &Image,
        d_deltas: Option<&[[f64; 10]]>,
    ) -> AvatarGrad {
        let n = self.splats.len();
        let rg = render_backward(cache, &self.render_inputs(posed), cam, cfg, d_image);
        let mut d_mu_star = Vec::with_capacity(n);
        let mut d_rot_star = Vec::with_capacity(n);
        let mut d_scale_star = Vec::with_capacity(n);
        let mut d_output = DMatrix::<f64>::zeros(OUTPUT_WIDTH, n);
        for i in 0..n {
            let g = &rg[i];
            let r = &posed.rectified[i];
            let (d_rmat, d_scale) = covariance_backward(&posed.rotations[i], &r.scale, &g.cov);
            let d_rot = matrix_backward(r.rotation, &d_rmat);
            let dg = apply_deltas_backward(&posed.bound[i], &posed.deltas[i], r, &g.mu, &d_rot, &d_scale);
            d_mu_star.push(dg.d_mu_star);
            d_rot_star.push(dg.d_rot_star);
            d_scale_star.push(dg.d_scale_star);
            let mut col = dg.d_output.to_array();
            if let Some(extra) = d_deltas {
                for (c, e) in col.iter_mut().zip(&extra[i]) {
                    *c += e;
                }
            }
            d_output.column_mut(i).copy_from_slice(&col);
        }
        let rectifier = match (&self.rectifier, &posed.rect_cache) {
            (Some(params), Some(rc)) => {
                let (grads, d_mu) = params.backward_batch(rc, &d_output);
                for (acc, d) in d_mu_star.iter_mut().zip(d_mu) {
                    *acc += d;
                }
                Some(grads)
            }
            _ => None,
        };

        let mut out = AvatarGrad {
            mu_local: Vec::with_capacity(n),
            rot_local: Vec::with_capacity(n),
            log_scale: Vec::with_capacity(n),
            opacity_logit: Vec::with_capacity(n),
            sh: Vec::with_capacity(n),
            rectifier,
            screen: Vec::with_capacity(n),
        };
        for (i, s) in self.splats.iter().enumerate() {
            let frame = &posed.frames[s.parent_face];
            out.mu_local.push(frame.scale * (frame.rotation.transpose() * d_mu_star[i]));
            let (_, d_unit) = mul_backward(frame.orientation, posed.local_rotations[i], d_rot_star[i]);
            out.rot_local.push(normalize_backward(s.rot_local, d_unit));
            let scale = s.scale();
            out.log_scale.push(frame.scale * d_scale_star[i].component_mul(&scale));
            let o = s.opacity();
            out.opacity_logit.push(rg[i].opacity * o * (1.0 - o));
            out.sh.push(rg[i].sh.clone());
            out.screen.push(rg[i].visible.then_some(rg[i].screen));
        }
        out
    }
}
