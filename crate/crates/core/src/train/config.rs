use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::loss::{LossWeights, SsimConfig};
use crate::raster::RasterConfig;
use crate::rectifier::RectifierConfig;

/// Constant learning rates per group; the position rate decays log-linearly
/// from `position_init` to `position_final` over the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningRates {
    pub position_init: f64,
    pub position_final: f64,
    pub scaling: f64,
    pub rotation: f64,
    pub opacity: f64,
    pub sh: f64,
    pub rectifier: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            position_init: 8e-3,
            position_final: 1e-5,
            scaling: 0.017,
            rotation: 0.001,
            opacity: 0.05,
            sh: 0.0025,
            rectifier: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    /// Epsilon for the splat attribute groups.
    pub eps_splats: f64,
    pub eps_rectifier: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps_splats: 1e-15, eps_rectifier: 1e-8 }
    }
}

/// Iteration counts of the run and its periodic events. An event at
/// iteration `i` fires after the `i`-th optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub total_iters: usize,
    pub densify_interval: usize,
    pub opacity_reset_interval: usize,
    pub opacity_reset_start: usize,
    /// Density control and opacity resets fire only strictly before this.
    pub density_control_end: usize,
    pub checkpoint_interval: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            total_iters: 50_000,
            densify_interval: 500,
            opacity_reset_interval: 5_000,
            opacity_reset_start: 10_000,
            density_control_end: 35_000,
            checkpoint_interval: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityConfig {
    /// Threshold on the mean NDC-space positional gradient norm.
    pub grad_threshold: f64,
    /// Split when the largest rest-pose world scale exceeds this fraction of
    /// the mesh extent; clone otherwise.
    pub split_scale_fraction: f64,
    pub prune_opacity: f64,
    pub split_divisor: f64,
    /// Opacity ceiling applied by an opacity reset.
    pub reset_opacity: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { grad_threshold: 2e-4, split_scale_fraction: 0.01, prune_opacity: 0.005, split_divisor: 1.6, reset_opacity: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegularizerConfig {
    pub pos_threshold: f64,
    pub scaling_threshold: f64,
}

impl Default for RegularizerConfig {
    fn default() -> Self {
        Self { pos_threshold: 1.0, scaling_threshold: 0.6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    pub opacity: f64,
    pub sh_degree: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { opacity: 0.1, sh_degree: 3 }
    }
}

/// Every tunable constant of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub lr: LearningRates,
    pub adam: AdamConfig,
    pub schedule: ScheduleConfig,
    pub density: DensityConfig,
    pub loss: LossWeights,
    pub regularizer: RegularizerConfig,
    pub ssim: SsimConfig,
    pub raster: RasterConfig,
    pub init: InitConfig,
    /// When false the rectifier is removed and splats render as bound.
    pub use_rectifier: bool,
    pub rectifier: RectifierConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            lr: LearningRates::default(),
            adam: AdamConfig::default(),
            schedule: ScheduleConfig::default(),
            density: DensityConfig::default(),
            loss: LossWeights::default(),
            regularizer: RegularizerConfig::default(),
            ssim: SsimConfig::default(),
            raster: RasterConfig::default(),
            init: InitConfig::default(),
            use_rectifier: true,
            rectifier: RectifierConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| TrainError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        let s = &self.schedule;
        if s.densify_interval == 0 || s.opacity_reset_interval == 0 {
            return bad("schedule intervals must be positive");
        }
        if s.density_control_end > s.total_iters {
            return bad("density_control_end must not exceed total_iters");
        }
        let lr = &self.lr;
        let rates = [lr.position_init, lr.position_final, lr.scaling, lr.rotation, lr.opacity, lr.sh, lr.rectifier];
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || !(lr.position_final > 0.0 && lr.position_init > 0.0) {
            return bad("learning rates must be finite and nonnegative, position rates positive");
        }
        let d = &self.density;
        if [d.grad_threshold, d.split_scale_fraction, d.prune_opacity, d.split_divisor].iter().any(|v| !(*v > 0.0)) {
            return bad("density-control thresholds must be positive");
        }
        if !(self.init.opacity > 0.0 && self.init.opacity < 1.0) {
            return bad("initial opacity must lie in (0, 1)");
        }
        if self.init.sh_degree > 3 {
            return bad("SH degree must be at most 3");
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        self.loss.validate().map_err(|e| TrainError::Config(e.to_string()))
    }
}
