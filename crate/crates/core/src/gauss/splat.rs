use serde::{Deserialize, Serialize};

use super::{sh, GaussError, Quaternion, Vec3};

/// Logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Inverse of [`sigmoid`] for `p ∈ (0, 1)`.
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Learnable attributes of one mesh-embedded Gaussian.
///
/// Position, rotation and scale are expressed in the local frame of the
/// parent triangle. Scale and opacity are stored in unconstrained form
/// (natural log and logit); the rotation is a raw quaternion normalized on
/// every read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSplat {
    pub mu_local: Vec3,
    pub rot_local: Quaternion,
    pub log_scale: Vec3,
    pub opacity_logit: f64,
    pub sh_coeffs: Vec<f64>,
    pub parent_face: usize,
}

impl GaussianSplat {
    /// A splat at the triangle's local origin with identity rotation and unit
    /// scale, colored with a flat mid-gray.
    pub fn at_face_origin(parent_face: usize, sh_degree: usize, opacity: f64) -> Self {
        Self {
            mu_local: Vec3::zeros(),
            rot_local: Quaternion::IDENTITY,
            log_scale: Vec3::zeros(),
            opacity_logit: logit(opacity),
            sh_coeffs: vec![0.0; sh::basis_count(sh_degree) * 3],
            parent_face,
        }
    }

    pub fn scale(&self) -> Vec3 {
        self.log_scale.map(f64::exp)
    }

    pub fn opacity(&self) -> f64 {
        sigmoid(self.opacity_logit)
    }

    pub fn rotation(&self) -> Result<Quaternion, GaussError> {
        self.rot_local.normalized()
    }

    pub fn sh_degree(&self) -> Option<usize> {
        sh::degree_for_len(self.sh_coeffs.len())
    }

    /// Sets only the DC band so the splat shows `rgb` from every direction.
    pub fn set_base_color(&mut self, rgb: [f64; 3]) {
        for (c, v) in rgb.iter().enumerate() {
            self.sh_coeffs[c] = sh::dc_for_color(*v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activation_round_trips() {
        for i in 0..=200 {
            let s = 1e-4 * (1e6f64).powf(f64::from(i) / 200.0);
            assert!((s.ln().exp() - s).abs() <= 1e-9 * s.max(1.0));
            let p = 1e-4 + (1.0 - 2e-4) * f64::from(i) / 200.0;
            assert!((sigmoid(logit(p)) - p).abs() < 1e-9);
        }
    }

    #[test]
    fn fresh_splat_is_activated_correctly() {
        let s = GaussianSplat::at_face_origin(4, 3, 0.1);
        assert_eq!(s.scale(), Vec3::new(1.0, 1.0, 1.0));
        assert!((s.opacity() - 0.1).abs() < 1e-12);
        assert_eq!(s.sh_degree(), Some(3));
        assert_eq!(s.rotation().unwrap(), Quaternion::IDENTITY);
    }
}
