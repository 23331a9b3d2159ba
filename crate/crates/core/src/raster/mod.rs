//! Differentiable tile-based splatting.
//!
//! [`project_gaussian`] maps world Gaussians to screen-space footprints,
//! [`rasterize_forward`] composites them front to back in 16×16 tiles, and
//! [`rasterize_backward`] returns exact gradients of that compositing.
//! [`naive_rasterize`] is a quadratic reference used to check the tiled path.

mod camera;
mod image;
mod kernel;
mod naive;
mod project;
mod render;
mod tiled;

pub use camera::Camera;
pub use image::{Image, RAW_MAGIC, RAW_VERSION};
pub use naive::naive_rasterize;
pub use project::{project_backward, project_gaussian, ProjectedSplat, Projection, RasterConfig};
pub use render::{render, render_backward, GaussianGrad, RenderCache, RenderGaussian};
pub use tiled::{rasterize_backward, rasterize_forward, ProjectedGrad, RasterCache};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RasterError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("{path}: {message}")]
    Image { path: String, message: String },
    #[error("raw image: {0}")]
    RawFormat(String),
}

/// Rendered color, coverage and per-pixel contributor counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub color: Image,
    pub alpha: Vec<f64>,
    pub contributors: Vec<u32>,
    /// Splats skipped because their projected covariance was singular.
    pub singular_skipped: usize,
}

impl RenderOutput {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            color: Image::new(width, height),
            alpha: vec![0.0; width * height],
            contributors: vec![0; width * height],
            singular_skipped: 0,
        }
    }
}
