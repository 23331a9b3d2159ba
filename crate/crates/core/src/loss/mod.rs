//! Training losses, regularizers and image-quality metrics.
//!
//! Every loss comes with its gradient. Reductions are means, so loss
//! magnitudes do not change with the splat count.

mod color;
mod regularize;
mod ssim;
mod weights;

pub use color::{l1_loss, l1_loss_grad, mse, psnr, PSNR_CAP_DB};
pub use regularize::{reg_offset, reg_offset_grad, reg_pos, reg_pos_grad, reg_scaling, reg_scaling_grad};
pub use ssim::{ssim, ssim_loss, ssim_loss_grad, SsimConfig};
pub use weights::{total_loss, LossReport, LossTerm, LossTerms, LossWeights, PerceptualLoss};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("image shapes differ: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("image {width}x{height} is smaller than the {window}x{window} window")]
    ImageTooSmall { width: usize, height: usize, window: usize },
    #[error("loss weight {name} is negative or not finite: {value}")]
    InvalidWeight { name: &'static str, value: f64 },
}

use crate::raster::Image;

pub(crate) fn check_shapes(a: &Image, b: &Image) -> Result<(), LossError> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(LossError::ShapeMismatch { a: (a.width, a.height), b: (b.width, b.height) })
    }
}
