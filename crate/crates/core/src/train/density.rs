use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::DensityConfig;
use crate::gauss::{logit, GaussianSplat, Vec3};

/// Running mean of each splat's screen-space positional gradient norm over
/// the iterations in which it was rendered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    pub sum: Vec<f64>,
    pub count: Vec<u32>,
}

impl GradientStats {
    pub fn zeros(n: usize) -> Self {
        Self { sum: vec![0.0; n], count: vec![0; n] }
    }

    /// Records `∂L/∂mean2d` (pixels) rescaled to normalized device units.
    pub fn accumulate(&mut self, screen: &[Option<[f64; 2]>], width: usize, height: usize) {
        let (sx, sy) = (0.5 * width as f64, 0.5 * height as f64);
        for (i, g) in screen.iter().enumerate() {
            if let Some([gx, gy]) = g {
                self.sum[i] += (gx * sx).hypot(gy * sy);
                self.count[i] += 1;
            }
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        if self.count[i] == 0 {
            0.0
        } else {
            self.sum[i] / f64::from(self.count[i])
        }
    }
}

/// What one density-control event did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityOutcome {
    pub before: usize,
    pub after: usize,
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
    /// For each resulting splat, the index it kept its optimizer state from;
    /// `None` for newly created splats.
    pub source: Vec<Option<usize>>,
}

/// Clones or splits splats with large accumulated gradients, then prunes
/// near-transparent splats while keeping at least one splat on every face
/// in `0..faces`.
///
/// `face_scale[f]` is the rest-pose frame scale of face `f`; the splitting
/// decision compares `face_scale · max(s)` to `split_scale_fraction · extent`.
pub fn densify_and_prune<R: Rng>(
    splats: &mut Vec<GaussianSplat>,
    stats: &GradientStats,
    face_scale: &[f64],
    extent: f64,
    faces: usize,
    cfg: &DensityConfig,
    rng: &mut R,
) -> DensityOutcome {
    let before = splats.len();
    let scale_limit = cfg.split_scale_fraction * extent;
    let mut kept: Vec<(GaussianSplat, Option<usize>)> = Vec::with_capacity(before);
    let mut created: Vec<GaussianSplat> = Vec::new();
    let (mut cloned, mut split) = (0, 0);
    for (i, s) in splats.iter().enumerate() {
        if stats.mean(i) <= cfg.grad_threshold {
            kept.push((s.clone(), Some(i)));
            continue;
        }
        let world_scale = face_scale[s.parent_face] * s.scale().max();
        if world_scale > scale_limit {
            split += 1;
            let rot = s.rotation().map(|q| q.unit_to_matrix()).unwrap_or_else(|_| nalgebra::Matrix3::identity());
            let scale = s.scale();
            for _ in 0..2 {
                let z = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
                let mut child = s.clone();
                child.mu_local = s.mu_local + rot * z.component_mul(&scale);
                child.log_scale = (scale / cfg.split_divisor).map(f64::ln);
                created.push(child);
            }
        } else {
            cloned += 1;
            kept.push((s.clone(), Some(i)));
            created.push(s.clone());
        }
    }
    let candidates: Vec<(GaussianSplat, Option<usize>)> = kept.into_iter().chain(created.into_iter().map(|s| (s, None))).collect();

    // The most opaque splat of each face survives pruning.
    let mut best: Vec<Option<usize>> = vec![None; faces];
    for (k, (s, _)) in candidates.iter().enumerate() {
        let slot = &mut best[s.parent_face];
        if slot.is_none_or(|b| s.opacity_logit > candidates[b].0.opacity_logit) {
            *slot = Some(k);
        }
    }
    let mut result = Vec::with_capacity(candidates.len());
    let mut source = Vec::with_capacity(candidates.len());
    let mut pruned = 0;
    for (k, (s, src)) in candidates.into_iter().enumerate() {
        if s.opacity() < cfg.prune_opacity && best[s.parent_face] != Some(k) {
            pruned += 1;
            continue;
        }
        result.push(s);
        source.push(src);
    }
    *splats = result;
    DensityOutcome { before, after: splats.len(), cloned, split, pruned, source }
}

/// Caps every opacity at `ceiling`.
pub fn opacity_reset(splats: &mut [GaussianSplat], ceiling: f64) {
    let cap = logit(ceiling);
    for s in splats {
        if s.opacity_logit > cap {
            s.opacity_logit = cap;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn splat(face: usize, opacity: f64, log_scale: f64) -> GaussianSplat {
        let mut s = GaussianSplat::at_face_origin(face, 0, opacity);
        s.log_scale = Vec3::repeat(log_scale);
        s
    }

    fn stats(means: &[f64]) -> GradientStats {
        GradientStats { sum: means.to_vec(), count: vec![1; means.len()] }
    }

    #[test]
    fn quiescent_state_is_unchanged() {
        let mut s = vec![splat(0, 0.5, -1.0), splat(1, 0.9, -2.0)];
        let orig = s.clone();
        let out = densify_and_prune(&mut s, &stats(&[0.0, 1e-5]), &[1.0, 1.0], 1.0, 2, &DensityConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s, orig);
        assert_eq!(out.source, vec![Some(0), Some(1)]);
    }

    #[test]
    fn last_splat_on_a_face_is_never_pruned() {
        let mut s = vec![splat(0, 0.001, -1.0)];
        densify_and_prune(&mut s, &stats(&[0.0]), &[1.0], 1.0, 1, &DensityConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn low_opacity_duplicates_are_pruned() {
        let mut s = vec![splat(0, 0.001, -1.0), splat(0, 0.002, -1.0), splat(1, 0.5, -1.0)];
        let out = densify_and_prune(&mut s, &stats(&[0.0; 3]), &[1.0, 1.0], 1.0, 2, &DensityConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.pruned, 1);
        assert_eq!(out.source, vec![Some(1), Some(2)]);
    }

    #[test]
    fn split_children_inherit_the_face() {
        let mut s = vec![splat(0, 0.5, -1.0), splat(3, 0.5, 0.0)];
        let out = densify_and_prune(&mut s, &stats(&[0.0, 1.0]), &[1.0; 4], 1.0, 4, &DensityConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.split, 1);
        assert_eq!(s.len(), 3);
        assert_eq!(out.after, out.before + 1);
        assert_eq!(s[1].parent_face, 3);
        assert_eq!(s[2].parent_face, 3);
        assert!((s[1].scale().x - 1.0 / 1.6).abs() < 1e-12);
        assert_eq!(out.source, vec![Some(0), None, None]);
    }

    #[test]
    fn small_splats_are_cloned_exactly() {
        let mut s = vec![splat(2, 0.5, -8.0)];
        let out = densify_and_prune(&mut s, &stats(&[1.0]), &[1.0; 3], 1.0, 3, &DensityConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.cloned, 1);
        assert_eq!(s[0], s[1]);
        assert_eq!(out.source, vec![Some(0), None]);
    }

    #[test]
    fn opacity_reset_caps_values() {
        let mut s = vec![splat(0, 0.9, 0.0), splat(0, 0.005, 0.0)];
        opacity_reset(&mut s, 0.01);
        assert!((s[0].opacity() - 0.01).abs() < 1e-12);
        assert!((s[1].opacity() - 0.005).abs() < 1e-12);
        assert!(s.iter().all(|x| x.opacity() <= 0.01 + 1e-15));
    }

    #[test]
    fn accumulation_uses_normalized_device_units() {
        let mut g = GradientStats::zeros(2);
        g.accumulate(&[Some([0.1, 0.0]), None], 20, 10);
        g.accumulate(&[Some([0.0, 0.2]), None], 20, 10);
        assert!((g.mean(0) - 1.0).abs() < 1e-12);
        assert_eq!(g.mean(1), 0.0);
    }
}
