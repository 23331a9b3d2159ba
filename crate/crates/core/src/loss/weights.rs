use serde::{Deserialize, Serialize};

use super::LossError;
use crate::raster::Image;

/// Weights of the total objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub rgb: f64,
    pub ssim: f64,
    pub lpips: f64,
    pub pos: f64,
    pub scaling: f64,
    pub offset: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { rgb: 1.5, ssim: 0.2, lpips: 0.0, pos: 0.01, scaling: 1.0, offset: 1.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        for (name, value) in self.named() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(LossError::InvalidWeight { name, value });
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("rgb", self.rgb),
            ("ssim", self.ssim),
            ("lpips", self.lpips),
            ("pos", self.pos),
            ("scaling", self.scaling),
            ("offset", self.offset),
        ]
    }
}

/// Raw, unweighted loss values of one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub rgb: f64,
    pub ssim: f64,
    pub lpips: f64,
    pub pos: f64,
    pub scaling: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerm {
    pub raw: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub rgb: LossTerm,
    pub ssim: LossTerm,
    pub lpips: LossTerm,
    pub pos: LossTerm,
    pub scaling: LossTerm,
    pub offset: LossTerm,
    pub total: f64,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "iteration,rgb,ssim,lpips,pos,scaling,offset,total,psnr,splats";

    pub fn csv_row(&self, iteration: usize, psnr: f64, splats: usize) -> String {
        format!(
            "{iteration},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:.6},{splats}",
            self.rgb.raw, self.ssim.raw, self.lpips.raw, self.pos.raw, self.scaling.raw, self.offset.raw, self.total, psnr
        )
    }
}

/// Weighted sum of the loss terms, accumulated in declaration order.
pub fn total_loss(terms: &LossTerms, weights: &LossWeights) -> Result<LossReport, LossError> {
    weights.validate()?;
    let term = |raw: f64, w: f64| LossTerm { raw, weighted: raw * w };
    let mut r = LossReport {
        rgb: term(terms.rgb, weights.rgb),
        ssim: term(terms.ssim, weights.ssim),
        lpips: term(terms.lpips, weights.lpips),
        pos: term(terms.pos, weights.pos),
        scaling: term(terms.scaling, weights.scaling),
        offset: term(terms.offset, weights.offset),
        total: 0.0,
    };
    r.total = r.rgb.weighted + r.ssim.weighted + r.lpips.weighted + r.pos.weighted + r.scaling.weighted + r.offset.weighted;
    Ok(r)
}

/// Plug-in perceptual metric. Returns the loss and `∂loss/∂rendered`.
/// Without one registered the perceptual term is zero.
pub trait PerceptualLoss: Send + Sync {
    fn evaluate(&self, rendered: &Image, target: &Image) -> (f64, Image);
}
