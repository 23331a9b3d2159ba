//! Datasets, the synthetic tube rig and splat export.
//!
//! A dataset is a JSON manifest next to a rig file and PNG frames. See
//! [`DatasetManifest`] for the schema; [`synth_generate`] writes one.

mod dataset;
mod ply;
mod synth;

pub use dataset::{load_dataset, Dataset, DatasetManifest, FrameEntry, LoadedFrame, Split, MANIFEST_VERSION};
pub use ply::{export_ply, ply_pixel, read_ply, PlyFormat, PlyVertex, PLY_PROPERTIES};
pub use synth::{load_truth, synth_generate, tube_mesh, PoseSweep, SynthOutput, SyntheticRigSpec, TRUTH_FILE};

use crate::raster::RasterError;
use crate::rig::RigError;
use crate::train::TrainError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IoError {
    #[error("{path}: file not found")]
    Missing { path: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: manifest version {found} is not supported (expected {expected})")]
    Version { path: String, found: u32, expected: u32 },
    #[error("{path}: image is {image:?} but the camera of frame {frame} declares {camera:?}")]
    Dimension { path: String, frame: usize, image: (usize, usize), camera: (usize, usize) },
    #[error("{path}: frame {frame} has {got} joint rotations, the rig has {expected}")]
    PoseJoints { path: String, frame: usize, expected: usize, got: usize },
    #[error("{path}: {source}")]
    Rig { path: String, source: RigError },
    #[error("{path}: frame {frame}: {source}")]
    Camera { path: String, frame: usize, source: RasterError },
    #[error("{path}: malformed PLY: {message}")]
    Ply { path: String, message: String },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> IoError {
    let path = path.display().to_string();
    if e.kind() == std::io::ErrorKind::NotFound {
        IoError::Missing { path }
    } else {
        IoError::Io { path, message: e.to_string() }
    }
}
