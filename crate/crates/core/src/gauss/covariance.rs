use serde::{Deserialize, Serialize};

use super::{GaussError, Mat3, Quaternion, Vec3};

/// Symmetric 3×3 matrix stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Covariance3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl Covariance3 {
    /// Symmetrizes `m` by averaging off-diagonal pairs.
    pub fn from_matrix(m: &Mat3) -> Self {
        Self {
            xx: m[(0, 0)],
            xy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            xz: 0.5 * (m[(0, 2)] + m[(2, 0)]),
            yy: m[(1, 1)],
            yz: 0.5 * (m[(1, 2)] + m[(2, 1)]),
            zz: m[(2, 2)],
        }
    }

    pub fn to_matrix(&self) -> Mat3 {
        Mat3::new(
            self.xx, self.xy, self.xz, //
            self.xy, self.yy, self.yz, //
            self.xz, self.yz, self.zz,
        )
    }
}

/// `Σ = R·S·Sᵀ·Rᵀ` with `S = diag(scale)`.
pub fn build_covariance(rotation: Quaternion, scale: Vec3) -> Result<Covariance3, GaussError> {
    if scale.iter().any(|&s| !(s > 0.0)) {
        return Err(GaussError::InvalidScale { scale: [scale.x, scale.y, scale.z] });
    }
    let r = super::quat_to_matrix(rotation)?;
    Ok(Covariance3::from_matrix(&covariance_from_unit(&r, &scale)))
}

pub(crate) fn covariance_from_unit(r: &Mat3, scale: &Vec3) -> Mat3 {
    let m = r * Mat3::from_diagonal(scale);
    m * m.transpose()
}

/// Backward through `Σ = (R S)(R S)ᵀ`: returns gradients for `R` and `scale`.
pub(crate) fn covariance_backward(r: &Mat3, scale: &Vec3, d_sigma: &Mat3) -> (Mat3, Vec3) {
    let m = r * Mat3::from_diagonal(scale);
    let sym = 0.5 * (d_sigma + d_sigma.transpose());
    let d_m = 2.0 * sym * m;
    let mut d_r = Mat3::zeros();
    let mut d_s = Vec3::zeros();
    for j in 0..3 {
        for i in 0..3 {
            d_r[(i, j)] = d_m[(i, j)] * scale[j];
            d_s[j] += d_m[(i, j)] * r[(i, j)];
        }
    }
    (d_r, d_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_isotropic_is_identity() {
        let c = build_covariance(Quaternion::IDENTITY, Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(c.to_matrix(), Mat3::identity());
    }

    #[test]
    fn rotated_anisotropic_matches_explicit_product() {
        let h = std::f64::consts::FRAC_PI_4;
        let q = Quaternion::new(h.cos(), 0.0, 0.0, h.sin());
        let c = build_covariance(q, Vec3::new(2.0, 1.0, 1.0)).unwrap().to_matrix();
        // R = [[0,-1,0],[1,0,0],[0,0,1]], S² = diag(4,1,1)
        let r = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let oracle = r * Mat3::from_diagonal(&Vec3::new(4.0, 1.0, 1.0)) * r.transpose();
        assert!((c - oracle).abs().max() < 1e-12);
        assert!((c - Mat3::from_diagonal(&Vec3::new(1.0, 4.0, 1.0))).abs().max() < 1e-12);
    }

    #[test]
    fn non_positive_scale_is_rejected() {
        let err = build_covariance(Quaternion::IDENTITY, Vec3::new(1.0, 0.0, 1.0));
        assert!(matches!(err, Err(GaussError::InvalidScale { .. })));
    }

    #[test]
    fn random_covariances_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let q = Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let s = Vec3::new(
                rng.random_range(1e-4..10.0),
                rng.random_range(1e-4..10.0),
                rng.random_range(1e-4..10.0),
            );
            let m = build_covariance(q, s).unwrap().to_matrix();
            assert_eq!(m, m.transpose());
            let eig = nalgebra::SymmetricEigen::new(m);
            assert!(eig.eigenvalues.min() >= -1e-9);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let r = Quaternion::new(0.3, -0.5, 0.7, 0.2).normalized().unwrap().unit_to_matrix();
        let s = Vec3::new(0.4, 1.3, 0.8);
        let g = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let f = |r: &Mat3, s: &Vec3| covariance_from_unit(r, s).component_mul(&g).sum();
        let (dr, ds) = covariance_backward(&r, &s, &g);
        let h = 1e-6;
        for i in 0..3 {
            let mut sp = s;
            let mut sm = s;
            sp[i] += h;
            sm[i] -= h;
            let fd = (f(&r, &sp) - f(&r, &sm)) / (2.0 * h);
            assert!((fd - ds[i]).abs() < 1e-6);
            for j in 0..3 {
                let mut rp = r;
                let mut rm = r;
                rp[(i, j)] += h;
                rm[(i, j)] -= h;
                let fd = (f(&rp, &s) - f(&rm, &s)) / (2.0 * h);
                assert!((fd - dr[(i, j)]).abs() < 1e-6);
            }
        }
    }
}
