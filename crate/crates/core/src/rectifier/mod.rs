//! Pose-conditioned rectification of bound splats.
//!
//! A five-layer MLP maps the frequency-encoded world position of a splat
//! and the body pose to a 10-wide correction `(δμ, δr, δs)`, which is then
//! applied on top of the mesh-driven attributes.

mod deltas;
mod encoding;
mod mlp;

pub use deltas::{apply_deltas, apply_deltas_backward, RectifiedGaussian, RectifierOutput};
pub use encoding::{encode_backward, encode_into, positional_encode, EncoderConfig};
pub use mlp::{Activation, DenseLayer, ForwardCache, RectifierConfig, RectifierParams, OUTPUT_WIDTH};

use nalgebra::DMatrix;

use crate::gauss::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RectifierError {
    #[error("rectifier input must be {expected} wide, got {got}")]
    InputWidth { expected: usize, got: usize },
    #[error("expected {expected} rectifier parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
}

/// Evaluates the network for a single splat.
pub fn rectify_forward(params: &RectifierParams, mu_star: &Vec3, pose: &[f64]) -> Result<RectifierOutput, RectifierError> {
    let cache = params.forward_batch(std::slice::from_ref(mu_star), pose)?;
    Ok(RectifierOutput::from_column(cache.output.column(0).as_slice()))
}

/// Gradients of a scalar loss for one splat, given the upstream gradient of
/// the 10-wide output. Returns parameter gradients and `∂L/∂μ*`.
pub fn rectify_backward(
    params: &RectifierParams,
    mu_star: &Vec3,
    pose: &[f64],
    d_output: &RectifierOutput,
) -> Result<(RectifierParams, Vec3), RectifierError> {
    let cache = params.forward_batch(std::slice::from_ref(mu_star), pose)?;
    let d = DMatrix::from_column_slice(OUTPUT_WIDTH, 1, &d_output.to_array());
    let (grads, d_mu) = params.backward_batch(&cache, &d);
    Ok((grads, d_mu[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> RectifierConfig {
        RectifierConfig {
            encoder: EncoderConfig { num_bands: 2, include_identity: false },
            pose_width: 3,
            hidden_widths: [6, 7, 6, 5],
            ..RectifierConfig::default()
        }
    }

    fn randomized(config: RectifierConfig, rng: &mut ChaCha8Rng) -> RectifierParams {
        let mut p = RectifierParams::new(config, rng);
        let flat: Vec<f64> = p.to_flat().iter().map(|_| rng.random_range(-0.8..0.8)).collect();
        p.load_flat(&flat).unwrap();
        p
    }

    /// Straight-line evaluation of the same architecture, layer by layer.
    fn reference_forward(p: &RectifierParams, mu: &Vec3, pose: &[f64]) -> Vec<f64> {
        let mut input = positional_encode(mu, &p.config.encoder);
        input.extend_from_slice(pose);
        let mut h = input.clone();
        for (i, layer) in p.layers.iter().enumerate() {
            if i == p.config.skip_layer {
                h.extend_from_slice(&input);
            }
            let mut next = vec![0.0; layer.bias.len()];
            for (r, out) in next.iter_mut().enumerate() {
                let mut acc = layer.bias[r];
                for (c, x) in h.iter().enumerate() {
                    acc += layer.weight[(r, c)] * x;
                }
                *out = if i + 1 == p.layers.len() { acc } else { acc.max(0.0) };
            }
            h = next;
        }
        h
    }

    #[test]
    fn zero_network_is_a_no_op() {
        let p = RectifierParams::zeros(RectifierConfig::default());
        let out = rectify_forward(&p, &Vec3::new(0.3, 1.0, -0.2), &[0.1; 69]).unwrap();
        assert_eq!(out, RectifierOutput::default());
    }

    #[test]
    fn fresh_network_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let p = RectifierParams::new(RectifierConfig::default(), &mut rng);
        let out = rectify_forward(&p, &Vec3::new(0.3, 1.0, -0.2), &[0.4; 69]).unwrap();
        assert_eq!(out.to_array(), [0.0; 10]);
    }

    #[test]
    fn constant_network_returns_head_bias() {
        let mut p = RectifierParams::zeros(RectifierConfig::default());
        let b: Vec<f64> = (0..10).map(|i| i as f64 * 0.1 - 0.3).collect();
        p.layers[4].bias.as_mut_slice().copy_from_slice(&b);
        for mu in [Vec3::zeros(), Vec3::new(1.0, -2.0, 0.5)] {
            let out = rectify_forward(&p, &mu, &[0.7; 69]).unwrap();
            assert_eq!(out.to_array().to_vec(), b);
        }
    }

    #[test]
    fn wrong_pose_width_is_rejected() {
        let p = RectifierParams::zeros(RectifierConfig::default());
        assert!(matches!(
            rectify_forward(&p, &Vec3::zeros(), &[0.0; 10]),
            Err(RectifierError::InputWidth { expected: 105, got: 46 })
        ));
    }

    #[test]
    fn forward_matches_reference_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let p = randomized(RectifierConfig::default(), &mut rng);
        let pose: Vec<f64> = (0..69).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..5 {
            let mu = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let got = rectify_forward(&p, &mu, &pose).unwrap().to_array();
            let want = reference_forward(&p, &mu, &pose);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9 * w.abs().max(1.0));
            }
        }
    }

    #[test]
    fn batched_forward_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let p = randomized(RectifierConfig::default(), &mut rng);
        let mus: Vec<Vec3> = (0..17).map(|i| Vec3::new(i as f64 * 0.1, 0.2, -0.3)).collect();
        let a = p.forward_batch(&mus, &[0.2; 69]).unwrap().output;
        let b = p.forward_batch(&mus, &[0.2; 69]).unwrap().output;
        assert_eq!(a, b);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let p = randomized(RectifierConfig::default(), &mut rng);
        let (g, d_mu) = rectify_backward(&p, &Vec3::new(0.1, 0.2, 0.3), &[0.5; 69], &RectifierOutput::default()).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
        assert_eq!(d_mu, Vec3::zeros());
    }

    fn loss(p: &RectifierParams, mu: &Vec3, pose: &[f64], w: &[f64; 10]) -> f64 {
        rectify_forward(p, mu, pose).unwrap().to_array().iter().zip(w).map(|(a, b)| a * b).sum()
    }

    fn close(analytic: f64, fd: f64) -> bool {
        let diff = (analytic - fd).abs();
        diff <= 1e-3 * analytic.abs().max(fd.abs()) || diff < 1e-8
    }

    #[test]
    fn every_parameter_matches_finite_differences() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let p = randomized(small_config(), &mut rng);
            let mu = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let pose: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut w = [0.0; 10];
            w.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
            let d_out = RectifierOutput::from_column(&w);
            let (grads, d_mu) = rectify_backward(&p, &mu, &pose, &d_out).unwrap();
            let analytic = grads.to_flat();
            let base = p.to_flat();
            let h = 1e-4;
            for k in 0..base.len() {
                let mut plus = p.clone();
                let mut minus = p.clone();
                let mut f = base.clone();
                f[k] += h;
                plus.load_flat(&f).unwrap();
                f[k] -= 2.0 * h;
                minus.load_flat(&f).unwrap();
                let fd = (loss(&plus, &mu, &pose, &w) - loss(&minus, &mu, &pose, &w)) / (2.0 * h);
                assert!(close(analytic[k], fd), "seed {seed} param {k}: {} vs {fd}", analytic[k]);
            }
            for d in 0..3 {
                let mut mp = mu;
                let mut mm = mu;
                mp[d] += h;
                mm[d] -= h;
                let fd = (loss(&p, &mp, &pose, &w) - loss(&p, &mm, &pose, &w)) / (2.0 * h);
                assert!(close(d_mu[d], fd), "seed {seed} mu[{d}]: {} vs {fd}", d_mu[d]);
            }
        }
    }

    #[test]
    fn full_size_network_sampled_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let mut p = RectifierParams::new(RectifierConfig::default(), &mut rng);
        let head = p.layers[4].weight.map(|_| rng.random_range(-0.2..0.2));
        p.layers[4].weight = head;
        let mu = Vec3::new(0.2, 0.9, -0.1);
        let pose: Vec<f64> = (0..69).map(|_| rng.random_range(-0.5..0.5)).collect();
        let w = [0.3, -0.2, 0.5, 0.1, 0.7, -0.4, 0.2, -0.6, 0.3, 0.9];
        let (grads, _) = rectify_backward(&p, &mu, &pose, &RectifierOutput::from_column(&w)).unwrap();
        let analytic = grads.to_flat();
        let base = p.to_flat();
        let h = 1e-4;
        for _ in 0..300 {
            let k = rng.random_range(0..base.len());
            let mut plus = p.clone();
            let mut minus = p.clone();
            let mut f = base.clone();
            f[k] += h;
            plus.load_flat(&f).unwrap();
            f[k] -= 2.0 * h;
            minus.load_flat(&f).unwrap();
            let fd = (loss(&plus, &mu, &pose, &w) - loss(&minus, &mu, &pose, &w)) / (2.0 * h);
            assert!(close(analytic[k], fd), "param {k}: {} vs {fd}", analytic[k]);
        }
    }
}
