use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::schedule::lr_schedule;
use super::{
    adam_step, densify_and_prune, opacity_reset, AdamHyper, AdamState, Avatar, DensityOutcome, GradientStats,
    TrainConfig, TrainError,
};
use crate::gauss::{logit, Vec3};
use crate::loss::{
    l1_loss, l1_loss_grad, psnr, reg_offset, reg_offset_grad, reg_pos, reg_pos_grad, reg_scaling, reg_scaling_grad,
    ssim_loss, ssim_loss_grad, total_loss, LossReport, LossTerms, PerceptualLoss,
};
use crate::raster::{Camera, Image};
use crate::rig::{face_frames, Pose, RiggedMesh};

/// Activated opacities are kept within `sigmoid(±OPACITY_LOGIT_BOUND)`, so
/// they stay strictly inside (0, 1) in floating point.
pub const OPACITY_LOGIT_BOUND: f64 = 20.0;

/// One supervised view.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainFrame {
    pub image: Image,
    pub camera: Camera,
    pub pose: Pose,
}

/// Adam state for every parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub position: AdamState,
    pub scaling: AdamState,
    pub rotation: AdamState,
    pub opacity: AdamState,
    pub sh: AdamState,
    pub rectifier: AdamState,
}

impl Optimizer {
    pub fn for_avatar(splats: usize, sh_len: usize, rectifier_params: usize) -> Self {
        Self {
            position: AdamState::zeros(3 * splats),
            scaling: AdamState::zeros(3 * splats),
            rotation: AdamState::zeros(4 * splats),
            opacity: AdamState::zeros(splats),
            sh: AdamState::zeros(sh_len * splats),
            rectifier: AdamState::zeros(rectifier_params),
        }
    }

    pub fn groups(&self) -> [&AdamState; 6] {
        [&self.position, &self.scaling, &self.rotation, &self.opacity, &self.sh, &self.rectifier]
    }

    fn remap_splats(&mut self, sh_len: usize, source: &[Option<usize>]) {
        self.position.remap(3, source);
        self.scaling.remap(3, source);
        self.rotation.remap(4, source);
        self.opacity.remap(1, source);
        self.sh.remap(sh_len, source);
    }
}

/// Everything a checkpoint restores.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub config: TrainConfig,
    pub avatar: Avatar,
    pub optim: Optimizer,
    /// Completed optimizer steps.
    pub iteration: usize,
    pub rng: ChaCha8Rng,
    pub stats: GradientStats,
}

impl TrainState {
    /// Fresh state: one splat per face and a zero-head rectifier.
    pub fn new(config: TrainConfig, mesh: &RiggedMesh) -> Result<Self, TrainError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let avatar = Avatar::init(mesh, &config, &mut rng);
        let n = avatar.splats.len();
        let sh_len = avatar.splats.first().map_or(0, |s| s.sh_coeffs.len());
        let optim = Optimizer::for_avatar(n, sh_len, avatar.rectifier.as_ref().map_or(0, |p| p.param_count()));
        Ok(Self { config, avatar, optim, iteration: 0, rng, stats: GradientStats::zeros(n) })
    }
}

/// Result of one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Completed steps after this one.
    pub iteration: usize,
    pub frame: usize,
    pub loss: LossReport,
    /// PSNR of the rendered frame before the update.
    pub psnr: f64,
    pub splats: usize,
    pub density: Option<DensityOutcome>,
    pub opacity_reset: bool,
}

impl StepReport {
    pub fn csv_row(&self) -> String {
        self.loss.csv_row(self.iteration, self.psnr, self.splats)
    }
}

/// Optimizes a [`TrainState`] against a fixed set of frames of one rig.
pub struct Trainer<'a> {
    pub state: TrainState,
    mesh: &'a RiggedMesh,
    frames: &'a [TrainFrame],
    rest_face_scale: Vec<f64>,
    extent: f64,
    perceptual: Option<Box<dyn PerceptualLoss>>,
}

fn gather<const K: usize>(items: impl Iterator<Item = [f64; K]>) -> Vec<f64> {
    items.flat_map(|a| a.into_iter()).collect()
}

impl<'a> Trainer<'a> {
    pub fn new(state: TrainState, mesh: &'a RiggedMesh, frames: &'a [TrainFrame]) -> Result<Self, TrainError> {
        state.config.validate()?;
        mesh.validate()?;
        if frames.is_empty() {
            return Err(TrainError::NoFrames);
        }
        for f in frames {
            f.camera.validate()?;
            if f.image.width != f.camera.width || f.image.height != f.camera.height {
                return Err(TrainError::Config(format!(
                    "frame image {}x{} does not match camera {}x{}",
                    f.image.width, f.image.height, f.camera.width, f.camera.height
                )));
            }
        }
        let rest = face_frames(&mesh.faces, &mesh.vertices)?;
        Ok(Self {
            rest_face_scale: rest.iter().map(|f| f.scale).collect(),
            extent: mesh.extent(),
            state,
            mesh,
            frames,
            perceptual: None,
        })
    }

    /// Registers a perceptual loss weighted by the `lpips` loss weight.
    pub fn set_perceptual(&mut self, loss: Box<dyn PerceptualLoss>) {
        self.perceptual = Some(loss);
    }

    pub fn is_done(&self) -> bool {
        self.state.iteration >= self.state.config.schedule.total_iters
    }

    /// Runs one optimizer step on a uniformly sampled frame, followed by any
    /// scheduled density control and opacity reset.
    pub fn step(&mut self) -> Result<StepReport, TrainError> {
        let cfg = self.state.config.clone();
        let it = self.state.iteration;
        if self.is_done() {
            return Err(TrainError::IterationOutOfRange { iter: it + 1, total: cfg.schedule.total_iters });
        }
        let frame_index = self.state.rng.random_range(0..self.frames.len());
        let frame = &self.frames[frame_index];
        let avatar = &self.state.avatar;
        let posed = avatar.pose(self.mesh, &frame.pose)?;
        let (out, cache) = avatar.render_posed(&posed, &frame.camera, &cfg.raster);
        let rendered = &out.color;
        let target = &frame.image;

        let w = &cfg.loss;
        let mut d_image = l1_loss_grad(rendered, target)?;
        d_image.data.iter_mut().for_each(|v| *v *= w.rgb);
        let ssim_grad = ssim_loss_grad(rendered, target, &cfg.ssim)?;
        for (d, s) in d_image.data.iter_mut().zip(&ssim_grad.data) {
            *d += w.ssim * s;
        }
        let mut lpips = 0.0;
        if let Some(p) = &self.perceptual {
            let (value, grad) = p.evaluate(rendered, target);
            lpips = value;
            for (d, g) in d_image.data.iter_mut().zip(&grad.data) {
                *d += w.lpips * g;
            }
        }

        let mu_local: Vec<Vec3> = avatar.splats.iter().map(|s| s.mu_local).collect();
        let scales: Vec<Vec3> = avatar.splats.iter().map(|s| s.scale()).collect();
        let deltas: Vec<[f64; 10]> = posed.deltas.iter().map(|d| d.to_array()).collect();
        let reg = &cfg.regularizer;
        let terms = LossTerms {
            rgb: l1_loss(rendered, target)?,
            ssim: ssim_loss(rendered, target, &cfg.ssim)?,
            lpips,
            pos: reg_pos(&mu_local, reg.pos_threshold),
            scaling: reg_scaling(&scales, reg.scaling_threshold),
            offset: reg_offset(&deltas),
        };
        let report = total_loss(&terms, w)?;
        if !report.total.is_finite() {
            return Err(TrainError::NonFiniteLoss { iteration: it });
        }
        let frame_psnr = psnr(rendered, target)?;

        let d_offset: Option<Vec<[f64; 10]>> = avatar
            .rectifier
            .is_some()
            .then(|| reg_offset_grad(&deltas).into_iter().map(|g| g.map(|v| v * w.offset)).collect());
        let mut grad = avatar.backward(&posed, &cache, &frame.camera, &cfg.raster, &d_image, d_offset.as_deref());
        for (g, r) in grad.mu_local.iter_mut().zip(reg_pos_grad(&mu_local, reg.pos_threshold)) {
            *g += w.pos * r;
        }
        for ((g, r), s) in grad.log_scale.iter_mut().zip(reg_scaling_grad(&scales, reg.scaling_threshold)).zip(&scales) {
            *g += w.scaling * r.component_mul(s);
        }

        let adam = |lr: f64, eps: f64| AdamHyper { lr, beta1: cfg.adam.beta1, beta2: cfg.adam.beta2, eps };
        let sched = &cfg.schedule;
        let lr_pos = lr_schedule(it, sched.total_iters, cfg.lr.position_init, cfg.lr.position_final)?;
        let eps = cfg.adam.eps_splats;
        let state = &mut self.state;
        let splats = &mut state.avatar.splats;
        let optim = &mut state.optim;

        let mut p = gather(splats.iter().map(|s| [s.mu_local.x, s.mu_local.y, s.mu_local.z]));
        let g = gather(grad.mu_local.iter().map(|v| [v.x, v.y, v.z]));
        adam_step(&mut p, &g, &mut optim.position, &adam(lr_pos, eps), "position")?;
        for (s, c) in splats.iter_mut().zip(p.chunks_exact(3)) {
            s.mu_local = Vec3::new(c[0], c[1], c[2]);
        }

        let mut p = gather(splats.iter().map(|s| [s.log_scale.x, s.log_scale.y, s.log_scale.z]));
        let g = gather(grad.log_scale.iter().map(|v| [v.x, v.y, v.z]));
        adam_step(&mut p, &g, &mut optim.scaling, &adam(cfg.lr.scaling, eps), "scaling")?;
        for (s, c) in splats.iter_mut().zip(p.chunks_exact(3)) {
            s.log_scale = Vec3::new(c[0], c[1], c[2]);
        }

        let mut p = gather(splats.iter().map(|s| s.rot_local.to_array()));
        let g = gather(grad.rot_local.iter().map(|q| q.to_array()));
        adam_step(&mut p, &g, &mut optim.rotation, &adam(cfg.lr.rotation, eps), "rotation")?;
        for (s, c) in splats.iter_mut().zip(p.chunks_exact(4)) {
            s.rot_local = crate::gauss::Quaternion::new(c[0], c[1], c[2], c[3]);
        }

        let mut p: Vec<f64> = splats.iter().map(|s| s.opacity_logit).collect();
        adam_step(&mut p, &grad.opacity_logit, &mut optim.opacity, &adam(cfg.lr.opacity, eps), "opacity")?;
        for (s, v) in splats.iter_mut().zip(p) {
            s.opacity_logit = v.clamp(-OPACITY_LOGIT_BOUND, OPACITY_LOGIT_BOUND);
        }

        let mut p: Vec<f64> = splats.iter().flat_map(|s| s.sh_coeffs.iter().copied()).collect();
        let g: Vec<f64> = grad.sh.iter().flatten().copied().collect();
        adam_step(&mut p, &g, &mut optim.sh, &adam(cfg.lr.sh, eps), "sh")?;
        let mut offset = 0;
        for s in splats.iter_mut() {
            let n = s.sh_coeffs.len();
            s.sh_coeffs.copy_from_slice(&p[offset..offset + n]);
            offset += n;
        }

        if let (Some(params), Some(g)) = (state.avatar.rectifier.as_mut(), grad.rectifier.as_ref()) {
            let mut p = params.to_flat();
            let hp = adam(cfg.lr.rectifier, cfg.adam.eps_rectifier);
            adam_step(&mut p, &g.to_flat(), &mut optim.rectifier, &hp, "rectifier")?;
            params.load_flat(&p)?;
        }

        state.stats.accumulate(&grad.screen, frame.camera.width, frame.camera.height);
        state.iteration += 1;

        let events = sched.events_at(state.iteration);
        let density = events.densify.then(|| {
            let outcome = densify_and_prune(
                &mut state.avatar.splats,
                &state.stats,
                &self.rest_face_scale,
                self.extent,
                self.mesh.faces.len(),
                &cfg.density,
                &mut state.rng,
            );
            let sh_len = state.avatar.splats.first().map_or(0, |s| s.sh_coeffs.len());
            state.optim.remap_splats(sh_len, &outcome.source);
            state.stats = GradientStats::zeros(state.avatar.splats.len());
            outcome
        });
        if events.opacity_reset {
            opacity_reset(&mut state.avatar.splats, cfg.density.reset_opacity);
            debug_assert!(logit(cfg.density.reset_opacity) < OPACITY_LOGIT_BOUND);
            state.optim.opacity.m.fill(0.0);
            state.optim.opacity.v.fill(0.0);
        }

        Ok(StepReport {
            iteration: state.iteration,
            frame: frame_index,
            loss: report,
            psnr: frame_psnr,
            splats: state.avatar.splats.len(),
            density,
            opacity_reset: events.opacity_reset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::Quaternion;

    fn strip() -> RiggedMesh {
        RiggedMesh {
            vertices: vec![
                Vec3::new(-0.5, -0.5, 0.0),
                Vec3::new(0.5, -0.5, 0.0),
                Vec3::new(-0.5, 0.5, 0.0),
                Vec3::new(0.5, 0.5, 0.0),
            ],
            faces: vec![[0, 1, 2], [1, 3, 2]],
            skin_weights: vec![vec![1.0]; 4],
            joint_parents: vec![-1],
            joint_rest_positions: vec![Vec3::zeros()],
        }
    }

    fn frames(mesh: &RiggedMesh) -> Vec<TrainFrame> {
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, 2.0), Vec3::zeros(), Vec3::y(), 30.0, 24, 24);
        let mut truth = TrainState::new(small_config(false), mesh).unwrap().avatar;
        for (k, s) in truth.splats.iter_mut().enumerate() {
            s.log_scale = Vec3::repeat(-0.8);
            s.opacity_logit = 2.0;
            s.set_base_color([0.8, 0.3 + 0.4 * k as f64, 0.2]);
        }
        let image = truth.render(mesh, &Pose::rest(1), &cam, &Default::default()).unwrap().color;
        vec![TrainFrame { image, camera: cam, pose: Pose::rest(1) }]
    }

    fn small_config(rectifier: bool) -> TrainConfig {
        let mut cfg = TrainConfig::default();
        cfg.use_rectifier = rectifier;
        cfg.init.sh_degree = 0;
        cfg.rectifier.hidden_widths = [8, 8, 8, 8];
        cfg.schedule.total_iters = 600;
        cfg.schedule.density_control_end = 600;
        cfg
    }

    #[test]
    fn zero_iterations_keep_the_initialization() {
        let mesh = strip();
        let state = TrainState::new(small_config(true), &mesh).unwrap();
        assert!(state.avatar.splats.iter().all(|s| s.mu_local == Vec3::zeros() && s.rot_local == Quaternion::IDENTITY));
        assert!(state.avatar.splats.iter().all(|s| (s.opacity() - 0.1).abs() < 1e-12));
    }

    #[test]
    fn loss_decreases_on_a_single_frame() {
        let mesh = strip();
        let frames = frames(&mesh);
        let state = TrainState::new(small_config(false), &mesh).unwrap();
        let mut t = Trainer::new(state, &mesh, &frames).unwrap();
        let first = t.step().unwrap().loss.total;
        let mut last = first;
        while !t.is_done() {
            last = t.step().unwrap().loss.total;
        }
        assert!(last < 0.5 * first, "{first} -> {last}");
        assert!(t.step().is_err());
    }

    #[test]
    fn densify_event_keeps_optimizer_congruent() {
        let mesh = strip();
        let frames = frames(&mesh);
        let mut cfg = small_config(true);
        cfg.density.grad_threshold = 1e-12;
        let state = TrainState::new(cfg, &mesh).unwrap();
        let mut t = Trainer::new(state, &mesh, &frames).unwrap();
        let mut saw_event = false;
        while !t.is_done() {
            let r = t.step().unwrap();
            if let Some(d) = &r.density {
                saw_event = true;
                assert!(d.after > d.before);
            }
            let n = t.state.avatar.splats.len();
            assert_eq!(t.state.optim.position.len(), 3 * n);
            assert_eq!(t.state.optim.rotation.len(), 4 * n);
            assert_eq!(t.state.stats.sum.len(), n);
            assert!(t.state.avatar.face_counts(2).iter().all(|&c| c >= 1));
        }
        assert!(saw_event);
    }

    #[test]
    fn mismatched_frame_is_rejected() {
        let mesh = strip();
        let mut frames = frames(&mesh);
        frames[0].image = Image::new(10, 10);
        let state = TrainState::new(small_config(false), &mesh).unwrap();
        assert!(matches!(Trainer::new(state, &mesh, &frames), Err(TrainError::Config(_))));
    }
}
