use nalgebra::{Matrix2, Matrix2x3};
use serde::{Deserialize, Serialize};

use super::Camera;
use crate::gauss::{Mat3, Vec3};

/// Constants shared by the tiled and reference rasterizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RasterConfig {
    pub tile_size: usize,
    /// Added to the diagonal of every projected covariance (px²).
    pub low_pass: f64,
    pub alpha_clamp: f64,
    pub min_alpha: f64,
    pub min_transmittance: f64,
    /// Splats with camera depth at or below this (m) are culled.
    pub near_plane: f64,
    /// Half-width of a splat's square support in standard deviations.
    pub extent_sigmas: f64,
    /// Determinant below which a projected covariance counts as singular.
    pub min_determinant: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            tile_size: 16,
            low_pass: 0.3,
            alpha_clamp: 0.99,
            min_alpha: 1.0 / 255.0,
            min_transmittance: 1e-4,
            near_plane: 0.01,
            extent_sigmas: 3.0,
            min_determinant: 1e-12,
        }
    }
}

/// Screen-space footprint of a splat ready for compositing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedSplat {
    pub mean2d: [f64; 2],
    /// Symmetric 2×2 covariance `(a, b, c)` = `[[a, b], [b, c]]`, low-pass included.
    pub cov2d: [f64; 3],
    /// Inverse of `cov2d` in the same layout; zero when singular.
    pub conic: [f64; 3],
    pub depth: f64,
    pub color: [f64; 3],
    /// Activated opacity σ.
    pub opacity: f64,
    /// Half-width of the square support in pixels.
    pub radius: f64,
    pub singular: bool,
}

impl ProjectedSplat {
    pub fn new(mean2d: [f64; 2], cov2d: [f64; 3], depth: f64, color: [f64; 3], opacity: f64, cfg: &RasterConfig) -> Self {
        let [a, b, c] = cov2d;
        let det = a * c - b * b;
        let singular = !(det >= cfg.min_determinant);
        let (conic, radius) = if singular {
            ([0.0; 3], 0.0)
        } else {
            let mid = 0.5 * (a + c);
            let lambda_max = mid + (0.25 * (a - c) * (a - c) + b * b).sqrt();
            ([c / det, -b / det, a / det], cfg.extent_sigmas * lambda_max.sqrt())
        };
        Self { mean2d, cov2d, conic, depth, color, opacity, radius, singular }
    }

    /// Whether pixel center `(px, py)` lies in the square support.
    #[inline]
    pub fn covers(&self, px: f64, py: f64) -> bool {
        (px - self.mean2d[0]).abs() <= self.radius && (py - self.mean2d[1]).abs() <= self.radius
    }
}

/// Geometry of one projected Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub mean2d: [f64; 2],
    pub cov2d: [f64; 3],
    pub depth: f64,
}

fn jacobian(cam: &Camera, t: &Vec3) -> Matrix2x3<f64> {
    let (x, y, z) = (t.x, t.y, t.z);
    Matrix2x3::new(cam.fx / z, 0.0, -cam.fx * x / (z * z), 0.0, cam.fy / z, -cam.fy * y / (z * z))
}

/// Projects a world-space Gaussian through a pinhole camera, returning
/// `None` when it is behind the near plane or its support misses the image.
pub fn project_gaussian(mu: &Vec3, cov_world: &Mat3, cam: &Camera, cfg: &RasterConfig) -> Option<Projection> {
    let w = cam.rotation();
    let t = w * mu + cam.translation();
    if t.z <= cfg.near_plane {
        return None;
    }
    let mean2d = [cam.fx * t.x / t.z + cam.cx, cam.fy * t.y / t.z + cam.cy];
    let jw = jacobian(cam, &t) * w;
    let cov = jw * cov_world * jw.transpose();
    let cov2d = [cov[(0, 0)] + cfg.low_pass, 0.5 * (cov[(0, 1)] + cov[(1, 0)]), cov[(1, 1)] + cfg.low_pass];
    let proj = Projection { mean2d, cov2d, depth: t.z };
    let probe = ProjectedSplat::new(mean2d, cov2d, t.z, [0.0; 3], 1.0, cfg);
    let r = probe.radius;
    let off = mean2d[0] + r < 0.0
        || mean2d[0] - r > cam.width as f64
        || mean2d[1] + r < 0.0
        || mean2d[1] - r > cam.height as f64;
    if off && !probe.singular {
        return None;
    }
    Some(proj)
}

/// Backward of the conic inversion: gradient on `(a, b, c)` of the covariance
/// given the gradient on `(a, b, c)` of its inverse.
pub(crate) fn conic_backward(conic: &[f64; 3], d_conic: &[f64; 3]) -> [f64; 3] {
    let k = Matrix2::new(conic[0], conic[1], conic[1], conic[2]);
    let g = Matrix2::new(d_conic[0], 0.5 * d_conic[1], 0.5 * d_conic[1], d_conic[2]);
    let d = -(k * g * k);
    [d[(0, 0)], d[(0, 1)] + d[(1, 0)], d[(1, 1)]]
}

/// Backward of [`project_gaussian`]: maps gradients on the screen mean and
/// on the covariance entries `(a, b, c)` to the world mean and covariance.
pub fn project_backward(mu: &Vec3, cov_world: &Mat3, cam: &Camera, d_mean2d: &[f64; 2], d_cov2d: &[f64; 3]) -> (Vec3, Mat3) {
    let w = cam.rotation();
    let t = w * mu + cam.translation();
    let (x, y, z) = (t.x, t.y, t.z);
    let (fx, fy) = (cam.fx, cam.fy);
    let j = jacobian(cam, &t);
    let jw = j * w;

    let g2 = Matrix2::new(d_cov2d[0], 0.5 * d_cov2d[1], 0.5 * d_cov2d[1], d_cov2d[2]);
    let d_cov_world = jw.transpose() * g2 * jw;
    let d_jw = 2.0 * g2 * jw * cov_world;
    let d_j = d_jw * w.transpose();

    let z2 = z * z;
    let z3 = z2 * z;
    let mut d_t = Vec3::new(
        fx / z * d_mean2d[0] - fx / z2 * d_j[(0, 2)],
        fy / z * d_mean2d[1] - fy / z2 * d_j[(1, 2)],
        -fx * x / z2 * d_mean2d[0] - fy * y / z2 * d_mean2d[1],
    );
    d_t.z += -fx / z2 * d_j[(0, 0)] + 2.0 * fx * x / z3 * d_j[(0, 2)] - fy / z2 * d_j[(1, 1)]
        + 2.0 * fy * y / z3 * d_j[(1, 2)];
    (w.transpose() * d_t, d_cov_world)
}
