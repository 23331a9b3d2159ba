use crate::gauss::Vec3;

fn excess(v: &Vec3, eps: f64, symmetric: bool) -> Vec3 {
    v.map(|c| ((if symmetric { c.abs() } else { c }) - eps).max(0.0))
}

fn mean_norm_grad<const N: usize>(excess: [f64; N], direction: impl Fn(usize) -> f64, n: usize) -> [f64; N] {
    let norm = excess.iter().map(|e| e * e).sum::<f64>().sqrt();
    if norm == 0.0 {
        return [0.0; N];
    }
    std::array::from_fn(|k| if excess[k] > 0.0 { excess[k] / norm * direction(k) / n as f64 } else { 0.0 })
}

/// Mean over splats of `‖max(|μ| − ε, 0)‖`. Zero for an empty set.
pub fn reg_pos(mu_local: &[Vec3], eps: f64) -> f64 {
    if mu_local.is_empty() {
        return 0.0;
    }
    mu_local.iter().map(|m| excess(m, eps, true).norm()).sum::<f64>() / mu_local.len() as f64
}

pub fn reg_pos_grad(mu_local: &[Vec3], eps: f64) -> Vec<Vec3> {
    let n = mu_local.len();
    mu_local
        .iter()
        .map(|m| {
            let e = excess(m, eps, true);
            Vec3::from(mean_norm_grad([e.x, e.y, e.z], |k| m[k].signum(), n))
        })
        .collect()
}

/// Mean over splats of `‖max(s − ε, 0)‖` on activated local scales.
pub fn reg_scaling(scales: &[Vec3], eps: f64) -> f64 {
    if scales.is_empty() {
        return 0.0;
    }
    scales.iter().map(|s| excess(s, eps, false).norm()).sum::<f64>() / scales.len() as f64
}

pub fn reg_scaling_grad(scales: &[Vec3], eps: f64) -> Vec<Vec3> {
    let n = scales.len();
    scales
        .iter()
        .map(|s| {
            let e = excess(s, eps, false);
            Vec3::from(mean_norm_grad([e.x, e.y, e.z], |_| 1.0, n))
        })
        .collect()
}

/// Mean over splats of the norm of the full 10-channel rectifier output.
pub fn reg_offset(deltas: &[[f64; 10]]) -> f64 {
    if deltas.is_empty() {
        return 0.0;
    }
    deltas.iter().map(|d| d.iter().map(|v| v * v).sum::<f64>().sqrt()).sum::<f64>() / deltas.len() as f64
}

/// Uses a zero subgradient at the origin, where the norm is not differentiable.
pub fn reg_offset_grad(deltas: &[[f64; 10]]) -> Vec<[f64; 10]> {
    let n = deltas.len() as f64;
    deltas
        .iter()
        .map(|d| {
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                [0.0; 10]
            } else {
                d.map(|v| v / norm / n)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn position_examples() {
        assert_eq!(reg_pos(&[Vec3::new(0.5, 0.0, 0.0)], 1.0), 0.0);
        assert_eq!(reg_pos(&[Vec3::new(2.0, 0.0, 0.0)], 1.0), 1.0);
        assert!((reg_pos(&[Vec3::new(2.0, -2.0, 0.0)], 1.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(reg_scaling(&[Vec3::new(0.5, 0.5, 0.5)], 0.6), 0.0);
        assert!((reg_scaling(&[Vec3::new(1.6, 0.6, 0.6)], 0.6) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s: Vec<Vec3> =
            (0..50).map(|_| Vec3::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..2.0))).collect();
        let mut total = 0.0;
        for v in &s {
            let mut sq = 0.0;
            for c in 0..3 {
                if v[c] > 0.6 {
                    sq += (v[c] - 0.6) * (v[c] - 0.6);
                }
            }
            total += sq.sqrt();
        }
        assert!((reg_scaling(&s, 0.6) - total / 50.0).abs() < 1e-9);
    }

    #[test]
    fn offset_examples() {
        assert_eq!(reg_offset(&[[0.0; 10]; 4]), 0.0);
        let mut d = [0.0; 10];
        d[0] = 0.3;
        assert!((reg_offset(&[d]) - 0.3).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ds: Vec<[f64; 10]> = (0..20).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
        let direct: f64 = ds.iter().map(|d| d.iter().fold(0.0, |a, v| a + v * v).sqrt()).sum::<f64>() / 20.0;
        assert!((reg_offset(&ds) - direct).abs() < 1e-9);
    }

    fn check_vec_grad(f: impl Fn(&[Vec3]) -> f64, g: Vec<Vec3>, x: &[Vec3]) {
        let h = 1e-6;
        for i in 0..x.len() {
            for c in 0..3 {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i][c] += h;
                m[i][c] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                let diff = (fd - g[i][c]).abs();
                assert!(diff <= 1e-3 * fd.abs().max(g[i][c].abs()) || diff < 1e-9);
            }
        }
    }

    /// Samples coordinates away from the threshold kinks.
    fn sample(rng: &mut ChaCha8Rng, eps: f64, signed: bool) -> f64 {
        loop {
            let v: f64 = if signed { rng.random_range(-2.0..2.0) } else { rng.random_range(0.0..2.0) };
            if (v.abs() - eps).abs() > 1e-3 {
                return v;
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(30 + seed);
            let mu: Vec<Vec3> = (0..8).map(|_| Vec3::from_fn(|_, _| sample(&mut rng, 1.0, true))).collect();
            check_vec_grad(|m| reg_pos(m, 1.0), reg_pos_grad(&mu, 1.0), &mu);
            let s: Vec<Vec3> = (0..8).map(|_| Vec3::from_fn(|_, _| sample(&mut rng, 0.6, false))).collect();
            check_vec_grad(|v| reg_scaling(v, 0.6), reg_scaling_grad(&s, 0.6), &s);
            let d: Vec<[f64; 10]> = (0..6).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
            let g = reg_offset_grad(&d);
            let h = 1e-6;
            for i in 0..d.len() {
                for c in 0..10 {
                    let mut p = d.clone();
                    let mut m = d.clone();
                    p[i][c] += h;
                    m[i][c] -= h;
                    let fd = (reg_offset(&p) - reg_offset(&m)) / (2.0 * h);
                    assert!((fd - g[i][c]).abs() <= 1e-3 * fd.abs().max(1e-9));
                }
            }
        }
    }
}
