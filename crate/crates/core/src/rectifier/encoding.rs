use serde::{Deserialize, Serialize};

use crate::gauss::Vec3;

/// Frequency lift of a 3D position.
///
/// Band `k` contributes `sin(2ᵏπx)` for the three coordinates followed by
/// `cos(2ᵏπx)` for the three coordinates. When `include_identity` is set
/// the raw coordinates come first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub num_bands: usize,
    pub include_identity: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { num_bands: 6, include_identity: false }
    }
}

impl EncoderConfig {
    pub fn output_dim(&self) -> usize {
        3 * 2 * self.num_bands + if self.include_identity { 3 } else { 0 }
    }
}

fn band_frequency(k: usize) -> f64 {
    std::f64::consts::PI * (1u64 << k) as f64
}

/// Writes the encoding of `x` into `out` (length `cfg.output_dim()`).
pub fn encode_into(x: &Vec3, cfg: &EncoderConfig, out: &mut [f64]) {
    let mut i = 0;
    if cfg.include_identity {
        out[..3].copy_from_slice(x.as_slice());
        i = 3;
    }
    for k in 0..cfg.num_bands {
        let f = band_frequency(k);
        for d in 0..3 {
            let (s, c) = (f * x[d]).sin_cos();
            out[i + d] = s;
            out[i + 3 + d] = c;
        }
        i += 6;
    }
}

pub fn positional_encode(x: &Vec3, cfg: &EncoderConfig) -> Vec<f64> {
    let mut out = vec![0.0; cfg.output_dim()];
    encode_into(x, cfg, &mut out);
    out
}

/// Gradient with respect to `x` given the gradient of the features.
pub fn encode_backward(x: &Vec3, cfg: &EncoderConfig, d_features: &[f64]) -> Vec3 {
    let mut g = Vec3::zeros();
    let mut i = 0;
    if cfg.include_identity {
        g += Vec3::new(d_features[0], d_features[1], d_features[2]);
        i = 3;
    }
    for k in 0..cfg.num_bands {
        let f = band_frequency(k);
        for d in 0..3 {
            let (s, c) = (f * x[d]).sin_cos();
            g[d] += f * c * d_features[i + d] - f * s * d_features[i + 3 + d];
        }
        i += 6;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input() {
        let cfg = EncoderConfig::default();
        let e = positional_encode(&Vec3::zeros(), &cfg);
        assert_eq!(e.len(), 36);
        for band in e.chunks(6) {
            assert_eq!(&band[..3], &[0.0; 3]);
            assert_eq!(&band[3..], &[1.0; 3]);
        }
    }

    #[test]
    fn dimensions() {
        assert_eq!(EncoderConfig::default().output_dim(), 36);
        assert_eq!(EncoderConfig { num_bands: 4, include_identity: true }.output_dim(), 27);
        // Together with the 69-wide body pose this makes the 105-wide input.
        assert_eq!(EncoderConfig::default().output_dim() + 69, 105);
    }

    #[test]
    fn band_zero_has_period_two() {
        let cfg = EncoderConfig::default();
        let x = Vec3::new(0.3, -0.7, 1.1);
        let a = positional_encode(&x, &cfg);
        let b = positional_encode(&(x + Vec3::repeat(2.0)), &cfg);
        for i in 0..6 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_term_is_prepended() {
        let cfg = EncoderConfig { num_bands: 1, include_identity: true };
        let e = positional_encode(&Vec3::new(0.5, 0.0, 1.0), &cfg);
        assert_eq!(&e[..3], &[0.5, 0.0, 1.0]);
        assert!((e[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let cfg = EncoderConfig { num_bands: 6, include_identity: true };
        let x = Vec3::new(0.13, -0.41, 0.77);
        let w: Vec<f64> = (0..cfg.output_dim()).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let f = |x: &Vec3| positional_encode(x, &cfg).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let g = encode_backward(&x, &cfg, &w);
        let h = 1e-6;
        for d in 0..3 {
            let mut p = x;
            let mut m = x;
            p[d] += h;
            m[d] -= h;
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!((fd - g[d]).abs() < 1e-5 * fd.abs().max(1.0));
        }
    }
}
