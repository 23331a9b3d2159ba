//! Hamilton quaternions in `(w, x, y, z)` order.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{GaussError, Mat3, Vec3};

/// Norms at or below this are treated as zero.
pub const MIN_QUAT_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm_squared(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(self, other: Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.w * k, self.x * k, self.y * k, self.z * k)
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Unit quaternion with the same direction.
    pub fn normalized(self) -> Result<Self, GaussError> {
        let n = self.norm();
        if !(n > MIN_QUAT_NORM) {
            return Err(GaussError::DegenerateRotation { norm: n });
        }
        Ok(self.scale(1.0 / n))
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n < MIN_QUAT_NORM {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self::new(c, s * a.x, s * a.y, s * a.z)
    }

    /// Rotation vector form (axis scaled by angle).
    pub fn from_rotation_vector(v: Vec3) -> Self {
        Self::from_axis_angle(v, v.norm())
    }

    /// Shepperd's method; the result has non-negative `w`.
    pub fn from_rotation_matrix(m: &Mat3) -> Self {
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Self::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Self::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Self::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Self::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        let q = q.scale(1.0 / q.norm());
        if q.w < 0.0 {
            q.scale(-1.0)
        } else {
            q
        }
    }

    /// Rotation matrix of an already-normalized quaternion.
    pub fn unit_to_matrix(self) -> Mat3 {
        let Quaternion { w, x, y, z } = self;
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        self.unit_to_matrix() * v
    }
}

/// Raw Hamilton product, no normalization.
impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

/// Normalizes `q` and returns its rotation matrix.
pub fn quat_to_matrix(q: Quaternion) -> Result<Mat3, GaussError> {
    Ok(q.normalized()?.unit_to_matrix())
}

/// Composition `a · b`: rotating by the result equals rotating by `b` then `a`.
pub fn quat_multiply(a: Quaternion, b: Quaternion) -> Result<Quaternion, GaussError> {
    let a = a.normalized()?;
    let b = b.normalized()?;
    Ok(a * b)
}

/// Gradient of `q * b` with respect to both factors given upstream `g`.
pub(crate) fn mul_backward(a: Quaternion, b: Quaternion, g: Quaternion) -> (Quaternion, Quaternion) {
    // d(a*b)/da applied transposed is g * conj(b); similarly conj(a) * g for b.
    (g * b.conjugate(), a.conjugate() * g)
}

/// Backward through `q / |q|`.
pub(crate) fn normalize_backward(raw: Quaternion, g: Quaternion) -> Quaternion {
    let n = raw.norm();
    let u = raw.scale(1.0 / n);
    let d = u.dot(g);
    Quaternion::new(g.w - u.w * d, g.x - u.x * d, g.y - u.y * d, g.z - u.z * d).scale(1.0 / n)
}

/// Gradient of `unit_to_matrix(q)` contracted with an upstream matrix gradient.
pub(crate) fn matrix_backward(q: Quaternion, g: &Mat3) -> Quaternion {
    let Quaternion { w, x, y, z } = q;
    let g = |r: usize, c: usize| g[(r, c)];
    let dw = 2.0
        * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
    let dx = 2.0
        * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2)
            + z * g(2, 0)
            + w * g(2, 1)
            - 2.0 * x * g(2, 2));
    let dy = 2.0
        * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2)
            - w * g(2, 0)
            + z * g(2, 1)
            - 2.0 * y * g(2, 2));
    let dz = 2.0
        * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2.0 * z * g(1, 1)
            + y * g(1, 2)
            + x * g(2, 0)
            + y * g(2, 1));
    Quaternion::new(dw, dx, dy, dz)
}
