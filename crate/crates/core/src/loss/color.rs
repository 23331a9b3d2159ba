use super::{check_shapes, LossError};
use crate::raster::Image;

/// Reported PSNR when the images are numerically identical.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Mean absolute per-channel difference.
pub fn l1_loss(rendered: &Image, target: &Image) -> Result<f64, LossError> {
    check_shapes(rendered, target)?;
    let sum: f64 = rendered.data.iter().zip(&target.data).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / rendered.data.len() as f64)
}

/// `∂ l1 / ∂ rendered`, using sign(0) = 0.
pub fn l1_loss_grad(rendered: &Image, target: &Image) -> Result<Image, LossError> {
    check_shapes(rendered, target)?;
    let n = rendered.data.len() as f64;
    let data = rendered
        .data
        .iter()
        .zip(&target.data)
        .map(|(a, b)| {
            let d = a - b;
            if d > 0.0 {
                1.0 / n
            } else if d < 0.0 {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    Ok(Image { width: rendered.width, height: rendered.height, data })
}

pub fn mse(rendered: &Image, target: &Image) -> Result<f64, LossError> {
    check_shapes(rendered, target)?;
    let sum: f64 = rendered.data.iter().zip(&target.data).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / rendered.data.len() as f64)
}

/// Peak signal-to-noise ratio for peak value 1, capped at [`PSNR_CAP_DB`].
pub fn psnr(rendered: &Image, target: &Image) -> Result<f64, LossError> {
    let m = mse(rendered, target)?;
    if m < 1e-10 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP_DB))
}
