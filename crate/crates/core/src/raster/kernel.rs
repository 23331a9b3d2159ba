//! Per-pixel front-to-back compositing shared by every rasterizer path, so
//! the tiled and reference renderers execute identical arithmetic.

use super::{ProjectedSplat, RasterConfig};

/// One splat that contributed to a pixel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Contribution {
    /// Position in the candidate list.
    pub slot: u32,
    pub alpha: f64,
    /// Unscaled Gaussian falloff `exp(power)`.
    pub falloff: f64,
    /// Transmittance in front of this splat.
    pub transmittance: f64,
    pub clamped: bool,
    pub dx: f64,
    pub dy: f64,
}

/// Result of compositing one pixel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PixelResult {
    pub color: [f64; 3],
    pub transmittance: f64,
    pub contributors: u32,
}

/// Composites the candidates of pixel `(x, y)` in order. `visit` sees every
/// accepted contribution.
#[inline]
pub(crate) fn composite_pixel<F>(
    candidates: &[u32],
    splats: &[ProjectedSplat],
    x: usize,
    y: usize,
    cfg: &RasterConfig,
    mut visit: F,
) -> PixelResult
where
    F: FnMut(&Contribution),
{
    let px = x as f64 + 0.5;
    let py = y as f64 + 0.5;
    let mut t = 1.0;
    let mut color = [0.0; 3];
    let mut contributors = 0;
    for (slot, &idx) in candidates.iter().enumerate() {
        let s = &splats[idx as usize];
        if !s.covers(px, py) {
            continue;
        }
        let dx = px - s.mean2d[0];
        let dy = py - s.mean2d[1];
        let [a, b, c] = s.conic;
        let power = -0.5 * (a * dx * dx + c * dy * dy) - b * dx * dy;
        if power > 0.0 {
            continue;
        }
        let falloff = power.exp();
        let raw = s.opacity * falloff;
        let clamped = raw > cfg.alpha_clamp;
        let alpha = if clamped { cfg.alpha_clamp } else { raw };
        if alpha < cfg.min_alpha {
            continue;
        }
        let next_t = t * (1.0 - alpha);
        if next_t < cfg.min_transmittance {
            break;
        }
        let w = alpha * t;
        for ch in 0..3 {
            color[ch] += s.color[ch] * w;
        }
        visit(&Contribution { slot: slot as u32, alpha, falloff, transmittance: t, clamped, dx, dy });
        t = next_t;
        contributors += 1;
    }
    PixelResult { color, transmittance: t, contributors }
}
