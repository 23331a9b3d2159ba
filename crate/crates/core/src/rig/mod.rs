//! Rigged template meshes, linear blend skinning, triangle frames and the
//! binding of splats to posed triangles.

mod frame;
mod lbs;
mod mesh;

pub use frame::{bind_to_global, face_frames, triangle_frame, BoundGaussian, TriangleFrame};
pub use lbs::{pose_mesh, rodrigues, skin_points, skinning_transforms, Pose, RigidTransform, BODY_POSE_WIDTH};
pub use mesh::{RiggedMesh, MIN_FACE_AREA, WEIGHT_SUM_TOLERANCE};

use crate::gauss::GaussError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RigError {
    #[error("rig has no vertices, faces or joints")]
    Empty,
    #[error("joint count mismatch: rig has {expected}, got {got}")]
    JointCountMismatch { expected: usize, got: usize },
    #[error("joint {joint} has parent {parent}; parents must precede children and only joint 0 may be the root")]
    ParentOrder { joint: usize, parent: i64 },
    #[error("expected {expected} skin-weight rows, got {got}")]
    WeightRowCount { expected: usize, got: usize },
    #[error("vertex {vertex}: skin-weight row has {got} entries, expected {expected}")]
    WeightRowLength { vertex: usize, expected: usize, got: usize },
    #[error("vertex {vertex}: negative or non-finite weight on joint {joint}")]
    NegativeWeight { vertex: usize, joint: usize },
    #[error("vertex {vertex}: skin weights sum to {sum}, expected 1")]
    WeightRowSum { vertex: usize, sum: f64 },
    #[error("face {face} references vertex {index}, which does not exist")]
    FaceIndex { face: usize, index: usize },
    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("degenerate triangle (area {area:e})")]
    DegenerateTriangle { area: f64 },
    #[error("face {face} repeats directed edge {edge:?}; winding is inconsistent")]
    InconsistentWinding { face: usize, edge: (usize, usize) },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error(transparent)]
    Gauss(#[from] GaussError),
}
