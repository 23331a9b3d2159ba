use serde::{Deserialize, Serialize};

use super::{check_shapes, LossError};
use crate::raster::Image;

/// Structural-similarity constants. The window is a separable Gaussian
/// evaluated only where it fits inside the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, c1: 0.01 * 0.01, c2: 0.03 * 0.03 }
    }
}

impl SsimConfig {
    fn kernel(&self) -> Vec<f64> {
        let half = (self.window as f64 - 1.0) / 2.0;
        let raw: Vec<f64> =
            (0..self.window).map(|i| (-(i as f64 - half).powi(2) / (2.0 * self.sigma * self.sigma)).exp()).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
}

/// Single-channel plane.
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn channel(img: &Image, c: usize) -> Self {
        Self { w: img.width, h: img.height, v: img.data.iter().skip(c).step_by(3).copied().collect() }
    }

    fn map2(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        Plane { w: self.w, h: self.h, v: self.v.iter().zip(&other.v).map(|(&a, &b)| f(a, b)).collect() }
    }

    /// Valid-mode separable correlation with `k`.
    fn filter(&self, k: &[f64]) -> Plane {
        let n = k.len();
        let (ow, oh) = (self.w + 1 - n, self.h + 1 - n);
        let mut rows = vec![0.0; ow * self.h];
        for y in 0..self.h {
            let src = &self.v[y * self.w..(y + 1) * self.w];
            for x in 0..ow {
                rows[y * ow + x] = k.iter().zip(&src[x..x + n]).map(|(a, b)| a * b).sum();
            }
        }
        let mut out = vec![0.0; ow * oh];
        for y in 0..oh {
            for (t, &kt) in k.iter().enumerate() {
                let src = &rows[(y + t) * ow..(y + t + 1) * ow];
                let dst = &mut out[y * ow..(y + 1) * ow];
                for x in 0..ow {
                    dst[x] += kt * src[x];
                }
            }
        }
        Plane { w: ow, h: oh, v: out }
    }

    /// Adjoint of [`Plane::filter`], producing a `w × h` plane.
    fn filter_adjoint(&self, k: &[f64], w: usize, h: usize) -> Plane {
        let ow = self.w;
        let mut rows = vec![0.0; ow * h];
        for y in 0..self.h {
            for (t, &kt) in k.iter().enumerate() {
                let src = &self.v[y * ow..(y + 1) * ow];
                let dst = &mut rows[(y + t) * ow..(y + t + 1) * ow];
                for x in 0..ow {
                    dst[x] += kt * src[x];
                }
            }
        }
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            let dst = &mut out[y * w..(y + 1) * w];
            for x in 0..ow {
                let g = rows[y * ow + x];
                for (t, &kt) in k.iter().enumerate() {
                    dst[x + t] += kt * g;
                }
            }
        }
        Plane { w, h, v: out }
    }
}

/// Local statistics of one channel pair.
struct Stats {
    mu_x: Plane,
    mu_y: Plane,
    e_xx: Plane,
    e_yy: Plane,
    e_xy: Plane,
}

impl Stats {
    fn new(x: &Plane, y: &Plane, k: &[f64]) -> Self {
        Self {
            mu_x: x.filter(k),
            mu_y: y.filter(k),
            e_xx: x.map2(x, |a, b| a * b).filter(k),
            e_yy: y.map2(y, |a, b| a * b).filter(k),
            e_xy: x.map2(y, |a, b| a * b).filter(k),
        }
    }

    /// `(A1, A2, B1, B2)` such that the local index is `A1·A2 / (B1·B2)`.
    fn terms(&self, i: usize, cfg: &SsimConfig) -> [f64; 4] {
        let (mx, my) = (self.mu_x.v[i], self.mu_y.v[i]);
        let sxx = self.e_xx.v[i] - mx * mx;
        let syy = self.e_yy.v[i] - my * my;
        let sxy = self.e_xy.v[i] - mx * my;
        [2.0 * mx * my + cfg.c1, 2.0 * sxy + cfg.c2, mx * mx + my * my + cfg.c1, sxx + syy + cfg.c2]
    }
}

fn check(rendered: &Image, target: &Image, cfg: &SsimConfig) -> Result<(), LossError> {
    check_shapes(rendered, target)?;
    if rendered.width < cfg.window || rendered.height < cfg.window {
        return Err(LossError::ImageTooSmall { width: rendered.width, height: rendered.height, window: cfg.window });
    }
    Ok(())
}

/// Mean structural similarity over valid window positions and channels.
pub fn ssim(rendered: &Image, target: &Image, cfg: &SsimConfig) -> Result<f64, LossError> {
    check(rendered, target, cfg)?;
    let k = cfg.kernel();
    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..3 {
        let stats = Stats::new(&Plane::channel(rendered, c), &Plane::channel(target, c), &k);
        for i in 0..stats.mu_x.v.len() {
            let [a1, a2, b1, b2] = stats.terms(i, cfg);
            total += a1 * a2 / (b1 * b2);
        }
        count += stats.mu_x.v.len();
    }
    Ok(total / count as f64)
}

pub fn ssim_loss(rendered: &Image, target: &Image, cfg: &SsimConfig) -> Result<f64, LossError> {
    Ok(1.0 - ssim(rendered, target, cfg)?)
}

/// `∂(1 − ssim) / ∂ rendered`.
pub fn ssim_loss_grad(rendered: &Image, target: &Image, cfg: &SsimConfig) -> Result<Image, LossError> {
    check(rendered, target, cfg)?;
    let k = cfg.kernel();
    let (w, h) = (rendered.width, rendered.height);
    let valid = (w + 1 - cfg.window) * (h + 1 - cfg.window);
    let scale = -1.0 / (3 * valid) as f64;
    let mut out = Image::new(w, h);
    for c in 0..3 {
        let x = Plane::channel(rendered, c);
        let y = Plane::channel(target, c);
        let stats = Stats::new(&x, &y, &k);
        let n = stats.mu_x.v.len();
        let (ow, oh) = (stats.mu_x.w, stats.mu_x.h);
        let mut d_mu = vec![0.0; n];
        let mut d_exx = vec![0.0; n];
        let mut d_exy = vec![0.0; n];
        for i in 0..n {
            let [a1, a2, b1, b2] = stats.terms(i, cfg);
            let (mx, my) = (stats.mu_x.v[i], stats.mu_y.v[i]);
            let s = a1 * a2 / (b1 * b2);
            let den = b1 * b2;
            d_mu[i] = scale * (2.0 * my * (a2 - a1) - s * 2.0 * mx * (b2 - b1)) / den;
            d_exx[i] = scale * (-s / b2);
            d_exy[i] = scale * 2.0 * a1 / den;
        }
        let plane = |v: Vec<f64>| Plane { w: ow, h: oh, v }.filter_adjoint(&k, w, h);
        let g_mu = plane(d_mu);
        let g_exx = plane(d_exx);
        let g_exy = plane(d_exy);
        for i in 0..w * h {
            out.data[i * 3 + c] = g_mu.v[i] + 2.0 * x.v[i] * g_exx.v[i] + y.v[i] * g_exy.v[i];
        }
    }
    Ok(out)
}
