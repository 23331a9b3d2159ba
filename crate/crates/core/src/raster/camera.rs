use serde::{Deserialize, Serialize};

use super::RasterError;
use crate::gauss::{Mat3, Vec3};

/// Pinhole camera with a rigid world-to-camera transform.
///
/// Camera space follows the image convention: `+x` right, `+y` down and
/// `+z` forward. Pixel `(i, j)` covers `[i, i+1) × [j, j+1)`, so its center
/// sits at `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major 4×4 rigid transform.
    pub world_to_camera: [[f64; 4]; 4],
}

impl Camera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize, rotation: Mat3, translation: Vec3) -> Self {
        let mut m = [[0.0; 4]; 4];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = rotation[(r, c)];
            }
            m[r][3] = translation[r];
        }
        m[3][3] = 1.0;
        Self { fx, fy, cx, cy, width, height, world_to_camera: m }
    }

    /// Camera at `eye` looking at `target`, with `up` roughly pointing up in
    /// the image. The principal point is the image center.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, focal: f64, width: usize, height: usize) -> Self {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let rotation = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        Self::new(focal, focal, width as f64 / 2.0, height as f64 / 2.0, width, height, rotation, translation)
    }

    pub fn rotation(&self) -> Mat3 {
        let m = &self.world_to_camera;
        Mat3::new(m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2])
    }

    pub fn translation(&self) -> Vec3 {
        let m = &self.world_to_camera;
        Vec3::new(m[0][3], m[1][3], m[2][3])
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation().transpose() * self.translation())
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation() * p + self.translation()
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(RasterError::InvalidCamera("focal lengths must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RasterError::InvalidCamera("image must be non-empty".into()));
        }
        let r = self.rotation();
        let ortho = (r.transpose() * r - Mat3::identity()).abs().max();
        if ortho > 1e-6 || r.determinant() < 0.0 {
            return Err(RasterError::InvalidCamera(format!(
                "rotation block is not a proper rotation (orthogonality error {ortho:e})"
            )));
        }
        let m = &self.world_to_camera;
        if m[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(RasterError::InvalidCamera("bottom row must be (0, 0, 0, 1)".into()));
        }
        Ok(())
    }
}
