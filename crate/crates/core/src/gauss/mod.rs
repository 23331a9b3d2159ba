//! Gaussian primitives and the rotation, covariance and color math shared
//! by every other module.

mod covariance;
mod quaternion;
pub mod sh;
mod splat;

pub use covariance::{build_covariance, Covariance3};
pub(crate) use covariance::{covariance_backward, covariance_from_unit};
pub use quaternion::{quat_multiply, quat_to_matrix, Quaternion};
pub(crate) use quaternion::{matrix_backward, mul_backward, normalize_backward};
pub use sh::sh_to_color;
pub use splat::{logit, sigmoid, GaussianSplat};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussError {
    #[error("degenerate rotation: quaternion norm {norm:e}")]
    DegenerateRotation { norm: f64 },
    #[error("invalid scale {scale:?}: every component must be positive")]
    InvalidScale { scale: [f64; 3] },
    #[error("expected {expected} SH coefficients, got {got}")]
    ShCoefficientCount { expected: usize, got: usize },
    #[error("SH degree {0} is not supported (max 3)")]
    UnsupportedShDegree(usize),
}
