use super::{RigError, MIN_FACE_AREA};
use crate::gauss::{GaussianSplat, Mat3, Quaternion, Vec3};

/// Local coordinate frame of a posed triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleFrame {
    /// Columns are the unit edge, the unit normal and their cross product.
    pub rotation: Mat3,
    /// Same rotation as a unit quaternion.
    pub orientation: Quaternion,
    /// Centroid of the triangle.
    pub origin: Vec3,
    /// Mean of the edge length and the in-plane perpendicular height.
    pub scale: f64,
}

/// Builds the frame of triangle `(a, b, c)`. The edge is `b − a`; the
/// perpendicular is the part of `c − a` orthogonal to that edge.
pub fn triangle_frame(a: &Vec3, b: &Vec3, c: &Vec3) -> Result<TriangleFrame, RigError> {
    let e = b - a;
    let f = c - a;
    let cross = e.cross(&f);
    let area = 0.5 * cross.norm();
    if !(area > MIN_FACE_AREA) {
        return Err(RigError::DegenerateTriangle { area });
    }
    let e_len = e.norm();
    let e_hat = e / e_len;
    let n_hat = cross / cross.norm();
    let third = e_hat.cross(&n_hat);
    let rotation = Mat3::from_columns(&[e_hat, n_hat, third]);
    let det = rotation.determinant();
    if !(det > 0.0) {
        return Err(RigError::DegenerateTriangle { area });
    }
    let perp = f - e_hat * f.dot(&e_hat);
    Ok(TriangleFrame {
        rotation,
        orientation: Quaternion::from_rotation_matrix(&rotation),
        origin: (a + b + c) / 3.0,
        scale: 0.5 * (e_len + perp.norm()),
    })
}

/// Frames for every face of a posed vertex array.
pub fn face_frames(faces: &[[usize; 3]], verts: &[Vec3]) -> Result<Vec<TriangleFrame>, RigError> {
    faces
        .iter()
        .enumerate()
        .map(|(face, &[a, b, c])| {
            triangle_frame(&verts[a], &verts[b], &verts[c]).map_err(|e| match e {
                RigError::DegenerateTriangle { area } => RigError::DegenerateFace { face, area },
                other => other,
            })
        })
        .collect()
}

/// World-space position, unit rotation and scale of a bound splat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundGaussian {
    pub mu: Vec3,
    pub rotation: Quaternion,
    pub scale: Vec3,
}

/// Maps a splat's local attributes through its triangle frame:
/// `μ* = w·R·μ + M`, `r* = q(R) ⊗ r`, `s* = w·s`.
pub fn bind_to_global(splat: &GaussianSplat, frame: &TriangleFrame) -> Result<BoundGaussian, RigError> {
    let local_rot = splat.rotation()?;
    Ok(BoundGaussian {
        mu: frame.scale * (frame.rotation * splat.mu_local) + frame.origin,
        rotation: frame.orientation * local_rot,
        scale: frame.scale * splat.scale(),
    })
}
