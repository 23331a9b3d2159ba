use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{io_error, DatasetManifest, FrameEntry, IoError, Split, MANIFEST_VERSION};
use crate::gauss::{logit, GaussianSplat, Quaternion, Vec3};
use crate::raster::{Camera, RasterConfig};
use crate::rig::{Pose, RiggedMesh};
use crate::train::Avatar;

/// Name of the ground-truth splat file written next to the manifest.
pub const TRUTH_FILE: &str = "truth_splats.json";

/// Pose sequence of a synthetic dataset. Training pose `i` of `n` has phase
/// `t = i / n`; test poses sit halfway between consecutive training poses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseSweep {
    pub train_poses: usize,
    pub test_poses: usize,
    /// Full turns of the root about the tube axis over the sweep.
    pub spin_turns: f64,
    pub bend_max_deg: f64,
}

impl Default for PoseSweep {
    fn default() -> Self {
        Self { train_poses: 20, test_poses: 5, spin_turns: 1.0, bend_max_deg: 40.0 }
    }
}

/// Articulated tube along `+y`: `segment_count` segments of equal length and
/// `segment_count + 1` joints on the axis at `y = k · segment_length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticRigSpec {
    pub segment_count: usize,
    pub segment_length: f64,
    pub radius: f64,
    pub rings_per_segment: usize,
    pub radial_segments: usize,
    pub texture_seed: u64,
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub camera_distance: f64,
    pub sweep: PoseSweep,
    /// Pose-dependent radial swelling, in tube radii per radian of the first
    /// bend joint. Applied to the rendered ground truth only.
    pub bulge: f64,
    pub sh_degree: usize,
}

impl Default for SyntheticRigSpec {
    fn default() -> Self {
        Self {
            segment_count: 2,
            segment_length: 0.5,
            radius: 0.2,
            rings_per_segment: 4,
            radial_segments: 12,
            texture_seed: 0,
            width: 128,
            height: 128,
            focal: 250.0,
            camera_distance: 3.0,
            sweep: PoseSweep::default(),
            bulge: 0.0,
            sh_degree: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub mesh: RiggedMesh,
    pub truth: Avatar,
    pub manifest_data: DatasetManifest,
}

impl SyntheticRigSpec {
    fn length(&self) -> f64 {
        self.segment_count as f64 * self.segment_length
    }

    pub fn camera(&self) -> Camera {
        let mid = Vec3::new(0.0, 0.5 * self.length(), 0.0);
        let eye = mid + Vec3::new(0.0, 0.0, self.camera_distance);
        Camera::look_at(eye, mid, Vec3::y(), self.focal, self.width, self.height)
    }

    /// Pose at sweep phase `t ∈ [0, 1)`; `t = 0` is the rest pose.
    pub fn pose_at(&self, t: f64) -> Pose {
        let joints = self.segment_count + 1;
        let bend = self.sweep.bend_max_deg.to_radians();
        let mut rotations = vec![Vec3::zeros(); joints];
        rotations[0] = Vec3::new(0.0, TAU * self.sweep.spin_turns * t, 0.0);
        for (k, r) in rotations.iter_mut().enumerate().skip(1) {
            let freq = (k + 1) as f64;
            *r = Vec3::new(0.0, 0.0, bend * (TAU * freq * t).sin() / k as f64);
        }
        Pose { root_translation: Vec3::zeros(), joint_rotations: rotations }
    }

    /// Rest vertices swollen according to the pose's first bend angle.
    fn bulged_vertices(&self, mesh: &RiggedMesh, pose: &Pose) -> Vec<Vec3> {
        let angle = pose.joint_rotations.get(1).map_or(0.0, |r| r.z);
        let center = 0.5 * self.length();
        let width = 0.25 * self.length();
        mesh.vertices
            .iter()
            .map(|v| {
                let radial = Vec3::new(v.x, 0.0, v.z);
                let r = radial.norm();
                if r < 1e-12 {
                    return *v;
                }
                let bump = (-((v.y - center) / width).powi(2)).exp();
                v + radial / r * (self.bulge * self.radius * angle * bump)
            })
            .collect()
    }

    fn ground_truth(&self, mesh: &RiggedMesh) -> Avatar {
        let mut rng = ChaCha8Rng::seed_from_u64(self.texture_seed);
        let palette: [[f64; 3]; 2] = [
            [rng.random_range(0.6..0.95), rng.random_range(0.2..0.5), rng.random_range(0.1..0.3)],
            [rng.random_range(0.1..0.3), rng.random_range(0.4..0.7), rng.random_range(0.6..0.95)],
        ];
        let bands = rng.random_range(3..7) as f64;
        let rings = rng.random_range(2..5) as f64;
        let length = self.length();
        let splats = mesh
            .faces
            .iter()
            .enumerate()
            .map(|(f, &[a, b, c])| {
                let centroid = (mesh.vertices[a] + mesh.vertices[b] + mesh.vertices[c]) / 3.0;
                let phi = centroid.z.atan2(centroid.x).rem_euclid(TAU);
                let u = phi / TAU;
                let v = centroid.y / length;
                let stripe = ((u * bands).floor() + (v * rings).floor()) as usize % 2;
                let shade = 0.75 + 0.25 * (TAU * v).cos();
                let color = palette[stripe].map(|x| (x * shade).clamp(0.0, 1.0));

                let mut s = GaussianSplat::at_face_origin(f, self.sh_degree, 0.95);
                s.mu_local = Vec3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.05..0.05), rng.random_range(-0.2..0.2));
                s.rot_local = Quaternion::from_axis_angle(Vec3::y(), rng.random_range(-0.5..0.5));
                s.log_scale = Vec3::new(
                    rng.random_range(0.35f64..0.55).ln(),
                    rng.random_range(0.1f64..0.2).ln(),
                    rng.random_range(0.35f64..0.55).ln(),
                );
                s.opacity_logit = logit(0.95);
                s.set_base_color(color);
                s
            })
            .collect();
        Avatar { splats, rectifier: None, sh_degree: self.sh_degree }
    }
}

/// Builds the tube rig. Skin weights interpolate linearly between the two
/// joints bracketing each vertex along the axis.
pub fn tube_mesh(spec: &SyntheticRigSpec) -> RiggedMesh {
    let rings = spec.segment_count * spec.rings_per_segment;
    let m = spec.radial_segments;
    let length = spec.length();
    let joints = spec.segment_count + 1;
    let mut vertices = Vec::with_capacity((rings + 1) * m + 2);
    for r in 0..=rings {
        let y = length * r as f64 / rings as f64;
        for j in 0..m {
            let phi = TAU * j as f64 / m as f64;
            vertices.push(Vec3::new(spec.radius * phi.cos(), y, spec.radius * phi.sin()));
        }
    }
    let bottom = vertices.len();
    vertices.push(Vec3::zeros());
    let top = vertices.len();
    vertices.push(Vec3::new(0.0, length, 0.0));

    let idx = |r: usize, j: usize| r * m + j % m;
    let mut faces = Vec::with_capacity(2 * rings * m + 2 * m);
    for r in 0..rings {
        for j in 0..m {
            faces.push([idx(r, j), idx(r + 1, j), idx(r, j + 1)]);
            faces.push([idx(r + 1, j), idx(r + 1, j + 1), idx(r, j + 1)]);
        }
    }
    for j in 0..m {
        faces.push([bottom, idx(0, j), idx(0, j + 1)]);
        faces.push([top, idx(rings, j + 1), idx(rings, j)]);
    }

    let skin_weights = vertices
        .iter()
        .map(|v| {
            let s = (v.y / spec.segment_length).clamp(0.0, spec.segment_count as f64);
            let k = (s.floor() as usize).min(joints - 2);
            let t = s - k as f64;
            let mut row = vec![0.0; joints];
            row[k] = 1.0 - t;
            row[k + 1] = t;
            row
        })
        .collect();
    RiggedMesh {
        vertices,
        faces,
        skin_weights,
        joint_parents: (0..joints as i64).map(|k| k - 1).collect(),
        joint_rest_positions: (0..joints).map(|k| Vec3::new(0.0, k as f64 * spec.segment_length, 0.0)).collect(),
    }
}

/// Writes `rig.json`, the ground-truth splats, one PNG per pose and
/// `manifest.json` into `out_dir`. Output bytes depend only on `spec`.
pub fn synth_generate(spec: &SyntheticRigSpec, out_dir: &Path) -> Result<SynthOutput, IoError> {
    let frames_dir = out_dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| io_error(&frames_dir, e))?;
    let mesh = tube_mesh(spec);
    mesh.validate().map_err(|e| IoError::Rig { path: "<synthetic>".into(), source: e })?;
    let rig_path = out_dir.join("rig.json");
    mesh.save(&rig_path).map_err(|e| io_error(&rig_path, e))?;

    let truth = spec.ground_truth(&mesh);
    let truth_path = out_dir.join(TRUTH_FILE);
    let truth_json = serde_json::json!({ "sh_degree": truth.sh_degree, "splats": truth.splats });
    std::fs::write(&truth_path, serde_json::to_string(&truth_json).expect("splats serialize"))
        .map_err(|e| io_error(&truth_path, e))?;

    let camera = spec.camera();
    let n = spec.sweep.train_poses.max(1);
    let mut phases: Vec<(Split, String, f64)> =
        (0..spec.sweep.train_poses).map(|i| (Split::Train, format!("frames/train_{i:03}.png"), i as f64 / n as f64)).collect();
    for k in 0..spec.sweep.test_poses {
        let i = k * n / spec.sweep.test_poses.max(1);
        phases.push((Split::Test, format!("frames/test_{k:03}.png"), (i as f64 + 0.5) / n as f64));
    }
    let raster = RasterConfig::default();
    let mut frames = Vec::with_capacity(phases.len());
    for (split, image, t) in phases {
        let pose = spec.pose_at(t);
        let mut posed_mesh = mesh.clone();
        if spec.bulge != 0.0 {
            posed_mesh.vertices = spec.bulged_vertices(&mesh, &pose);
        }
        let render = truth.render(&posed_mesh, &pose, &camera, &raster)?;
        render.color.save_png(&out_dir.join(&image))?;
        frames.push(FrameEntry { image, camera: camera.clone(), pose, split });
    }
    let manifest = DatasetManifest { version: MANIFEST_VERSION, rig: "rig.json".into(), frames };
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    Ok(SynthOutput { manifest: manifest_path, mesh, truth, manifest_data: manifest })
}

/// Reads a ground-truth splat file written by [`synth_generate`].
pub fn load_truth(path: &Path) -> Result<Avatar, IoError> {
    #[derive(Deserialize)]
    struct Truth {
        sh_degree: usize,
        splats: Vec<GaussianSplat>,
    }
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let t: Truth = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(Avatar { splats: t.splats, rectifier: None, sh_degree: t.sh_degree })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::face_frames;

    #[test]
    fn tube_mesh_is_valid() {
        for segments in 1..4 {
            let spec = SyntheticRigSpec { segment_count: segments, ..Default::default() };
            let mesh = tube_mesh(&spec);
            mesh.validate().unwrap();
            assert_eq!(mesh.joint_count(), segments + 1);
            assert_eq!(mesh.faces.len(), 2 * segments * 4 * 12 + 24);
            face_frames(&mesh.faces, &mesh.vertices).unwrap();
        }
    }

    #[test]
    fn face_normals_point_outward() {
        let mesh = tube_mesh(&SyntheticRigSpec::default());
        let frames = face_frames(&mesh.faces, &mesh.vertices).unwrap();
        let center = Vec3::new(0.0, 0.5, 0.0);
        for f in &frames {
            assert!(f.rotation.column(1).dot(&(f.origin - center)) > 0.0);
        }
    }

    #[test]
    fn first_training_pose_is_rest() {
        let spec = SyntheticRigSpec::default();
        assert_eq!(spec.pose_at(0.0), Pose::rest(3));
    }

    #[test]
    fn ground_truth_is_inside_regularizer_bounds() {
        let spec = SyntheticRigSpec::default();
        let truth = spec.ground_truth(&tube_mesh(&spec));
        for s in &truth.splats {
            assert!(s.mu_local.iter().all(|v| v.abs() < 1.0));
            assert!(s.scale().iter().all(|&v| v <= 0.6));
        }
    }
}
