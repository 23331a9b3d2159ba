use crate::gauss::{mul_backward, normalize_backward, Quaternion, Vec3};
use crate::rig::BoundGaussian;

/// Rectified scales are clamped below at this value.
pub const MIN_RECTIFIED_SCALE: f64 = 1e-6;

/// Network output split into its three corrections.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RectifierOutput {
    pub d_mu: Vec3,
    /// Raw increment added to the identity quaternion before normalizing.
    pub d_rot: [f64; 4],
    pub d_scale: Vec3,
}

impl RectifierOutput {
    pub fn from_column(c: &[f64]) -> Self {
        Self {
            d_mu: Vec3::new(c[0], c[1], c[2]),
            d_rot: [c[3], c[4], c[5], c[6]],
            d_scale: Vec3::new(c[7], c[8], c[9]),
        }
    }

    pub fn to_array(&self) -> [f64; 10] {
        let (m, r, s) = (self.d_mu, self.d_rot, self.d_scale);
        [m.x, m.y, m.z, r[0], r[1], r[2], r[3], s.x, s.y, s.z]
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn rotation_raw(&self) -> Quaternion {
        Quaternion::new(1.0 + self.d_rot[0], self.d_rot[1], self.d_rot[2], self.d_rot[3])
    }
}

/// Splat attributes after rectification, ready to render.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectifiedGaussian {
    pub mu: Vec3,
    pub rotation: Quaternion,
    pub scale: Vec3,
    /// Components whose corrected scale fell to or below zero and were clamped.
    pub scale_clamped: [bool; 3],
}

impl RectifiedGaussian {
    /// The bound splat with no correction applied.
    pub fn unrectified(bound: &BoundGaussian) -> Self {
        Self { mu: bound.mu, rotation: bound.rotation, scale: bound.scale, scale_clamped: [false; 3] }
    }

    pub fn clamp_events(&self) -> usize {
        self.scale_clamped.iter().filter(|&&c| c).count()
    }
}

/// `μ′ = μ* + δμ`, `r′ = r* ⊗ normalize(1 + δr)`, `s′ = max(s* + δs, 1e-6)`.
pub fn apply_deltas(bound: &BoundGaussian, deltas: &RectifierOutput) -> RectifiedGaussian {
    let increment = deltas.rotation_raw().normalized().unwrap_or(Quaternion::IDENTITY);
    let raw_scale = bound.scale + deltas.d_scale;
    let scale_clamped = [raw_scale.x <= 0.0, raw_scale.y <= 0.0, raw_scale.z <= 0.0];
    RectifiedGaussian {
        mu: bound.mu + deltas.d_mu,
        rotation: bound.rotation * increment,
        scale: raw_scale.map(|s| s.max(MIN_RECTIFIED_SCALE)),
        scale_clamped,
    }
}

/// Gradients flowing into the bound attributes and into the network output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaGradients {
    pub d_mu_star: Vec3,
    pub d_rot_star: Quaternion,
    pub d_scale_star: Vec3,
    pub d_output: RectifierOutput,
}

/// Backward of [`apply_deltas`]; `d_rot` is the gradient with respect to the
/// components of the rectified unit quaternion.
pub fn apply_deltas_backward(
    bound: &BoundGaussian,
    deltas: &RectifierOutput,
    rectified: &RectifiedGaussian,
    d_mu: &Vec3,
    d_rot: &Quaternion,
    d_scale: &Vec3,
) -> DeltaGradients {
    let raw = deltas.rotation_raw();
    let (d_rot_star, d_delta_rot) = match raw.normalized() {
        Ok(increment) => {
            let (da, db) = mul_backward(bound.rotation, increment, *d_rot);
            (da, normalize_backward(raw, db))
        }
        Err(_) => (*d_rot, Quaternion::new(0.0, 0.0, 0.0, 0.0)),
    };
    let mut d_s = *d_scale;
    for (k, clamped) in rectified.scale_clamped.iter().enumerate() {
        if *clamped {
            d_s[k] = 0.0;
        }
    }
    DeltaGradients {
        d_mu_star: *d_mu,
        d_rot_star,
        d_scale_star: d_s,
        d_output: RectifierOutput { d_mu: *d_mu, d_rot: d_delta_rot.to_array(), d_scale: d_s },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bound() -> BoundGaussian {
        BoundGaussian {
            mu: Vec3::new(0.1, 0.2, 0.3),
            rotation: Quaternion::new(0.9, 0.1, -0.3, 0.2).normalized().unwrap(),
            scale: Vec3::new(0.05, 0.02, 0.04),
        }
    }

    #[test]
    fn zero_deltas_are_identity() {
        let b = bound();
        let r = apply_deltas(&b, &RectifierOutput::default());
        assert_eq!(r.mu, b.mu);
        assert_eq!(r.rotation, b.rotation);
        assert_eq!(r.scale, b.scale);
    }

    #[test]
    fn pure_translation() {
        let b = bound();
        let d = RectifierOutput { d_mu: Vec3::new(0.01, 0.0, 0.0), ..Default::default() };
        let r = apply_deltas(&b, &d);
        assert_eq!(r.mu, b.mu + Vec3::new(0.01, 0.0, 0.0));
        assert_eq!(r.rotation, b.rotation);
    }

    #[test]
    fn ten_degree_increment_rotates_by_ten_degrees() {
        let b = bound();
        let ten = 10f64.to_radians();
        let q10 = Quaternion::from_axis_angle(Vec3::new(0.3, -0.4, 0.5), ten);
        let d = RectifierOutput {
            d_rot: [q10.w - 1.0, q10.x, q10.y, q10.z],
            ..Default::default()
        };
        let r = apply_deltas(&b, &d);
        // Relative rotation r*⁻¹ ⊗ r′ must have angle 10°.
        let rel = b.rotation.conjugate() * r.rotation;
        let angle = 2.0 * rel.w.abs().min(1.0).acos();
        assert!((angle - ten).abs() < 1e-6);
        assert!((r.rotation.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_scale_is_clamped_and_counted() {
        let b = bound();
        let d = RectifierOutput { d_scale: Vec3::new(-1.0, 0.0, 0.0), ..Default::default() };
        let r = apply_deltas(&b, &d);
        assert_eq!(r.scale.x, MIN_RECTIFIED_SCALE);
        assert_eq!(r.clamp_events(), 1);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let b = bound();
        let d = RectifierOutput {
            d_mu: Vec3::new(0.01, -0.02, 0.0),
            d_rot: [0.05, -0.1, 0.07, 0.02],
            d_scale: Vec3::new(0.01, -0.005, 0.0),
        };
        let gm = Vec3::new(0.3, -0.7, 0.2);
        let gq = Quaternion::new(0.4, -0.1, 0.9, 0.3);
        let gs = Vec3::new(-0.5, 0.8, 0.1);
        let f = |d: &RectifierOutput| {
            let r = apply_deltas(&b, d);
            r.mu.dot(&gm) + r.rotation.dot(gq) + r.scale.dot(&gs)
        };
        let rect = apply_deltas(&b, &d);
        let g = apply_deltas_backward(&b, &d, &rect, &gm, &gq, &gs);
        let analytic = g.d_output.to_array();
        let base = d.to_array();
        let h = 1e-6;
        for k in 0..10 {
            let mut p = base;
            let mut m = base;
            p[k] += h;
            m[k] -= h;
            let fd = (f(&RectifierOutput::from_column(&p)) - f(&RectifierOutput::from_column(&m))) / (2.0 * h);
            assert!((fd - analytic[k]).abs() < 1e-7, "k={k}: {fd} vs {}", analytic[k]);
        }
    }
}
