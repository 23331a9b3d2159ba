//! Optimization of a mesh-bound avatar against posed images.
//!
//! [`Avatar`] runs the forward chain (skinning, triangle frames, binding,
//! rectification, rendering) and its exact backward pass. [`Trainer`] adds
//! losses, per-group Adam updates, density control and opacity resets;
//! [`checkpoint_save`] persists the whole state bit-exactly.

mod adam;
mod avatar;
mod checkpoint;
mod config;
mod density;
mod run;
mod schedule;
mod trainer;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use avatar::{Avatar, AvatarGrad, PosedAvatar};
pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_load, checkpoint_save, checkpoint_to_bytes, CheckpointError, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{AdamConfig, DensityConfig, InitConfig, LearningRates, RegularizerConfig, ScheduleConfig, TrainConfig};
pub use density::{densify_and_prune, opacity_reset, DensityOutcome, GradientStats};
pub use run::{event_rows, train_to_dir, TrainOutputs, EVENTS_HEADER};
pub use schedule::{lr_schedule, ScheduledEvents};
pub use trainer::{Optimizer, StepReport, TrainFrame, TrainState, Trainer, OPACITY_LOGIT_BOUND};

use crate::gauss::GaussError;
use crate::loss::LossError;
use crate::raster::RasterError;
use crate::rectifier::RectifierError;
use crate::rig::RigError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("config: {0}")]
    Config(String),
    #[error("no training frames")]
    NoFrames,
    #[error("iteration {iter} is outside 0..={total}")]
    IterationOutOfRange { iter: usize, total: usize },
    #[error("splat references face {face}, which the mesh does not have")]
    FaceIndex { face: usize },
    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("non-finite gradient in group {group} at index {index}: {value}")]
    NonFiniteGradient { group: &'static str, index: usize, value: f64 },
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Rig(#[from] RigError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Rectifier(#[from] RectifierError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
