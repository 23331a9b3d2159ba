use std::io::Write;
use std::path::{Path, PathBuf};

use super::{checkpoint_save, StepReport, TrainError, TrainFrame, TrainState, Trainer};
use crate::loss::LossReport;
use crate::rig::RiggedMesh;

/// Files produced by [`train_to_dir`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutputs {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub events: PathBuf,
    pub final_iteration: usize,
}

pub const EVENTS_HEADER: &str = "iteration,kind,before,after,cloned,split,pruned";

pub fn event_rows(r: &StepReport) -> Vec<String> {
    let mut rows = Vec::new();
    if let Some(d) = &r.density {
        rows.push(format!("{},densify,{},{},{},{},{}", r.iteration, d.before, d.after, d.cloned, d.split, d.pruned));
    }
    if r.opacity_reset {
        rows.push(format!("{},opacity_reset,{},{},0,0,0", r.iteration, r.splats, r.splats));
    }
    rows
}

/// Trains to completion, writing `checkpoint.rmav`, `train_log.csv` and
/// `events.csv` into `dir`. Periodic checkpoints overwrite the same file
/// atomically, so a failed step leaves the last good one in place.
pub fn train_to_dir(
    state: TrainState,
    mesh: &RiggedMesh,
    frames: &[TrainFrame],
    dir: &Path,
    mut on_step: impl FnMut(&StepReport),
) -> Result<TrainOutputs, TrainError> {
    std::fs::create_dir_all(dir).map_err(|e| TrainError::Io(format!("{}: {e}", dir.display())))?;
    let out = TrainOutputs {
        checkpoint: dir.join("checkpoint.rmav"),
        log: dir.join("train_log.csv"),
        events: dir.join("events.csv"),
        final_iteration: 0,
    };
    let io = |p: &Path, e: std::io::Error| TrainError::Io(format!("{}: {e}", p.display()));
    let mut log = std::io::BufWriter::new(std::fs::File::create(&out.log).map_err(|e| io(&out.log, e))?);
    let mut events = std::io::BufWriter::new(std::fs::File::create(&out.events).map_err(|e| io(&out.events, e))?);
    writeln!(log, "{}", LossReport::CSV_HEADER).map_err(|e| io(&out.log, e))?;
    writeln!(events, "{EVENTS_HEADER}").map_err(|e| io(&out.events, e))?;

    let interval = state.config.schedule.checkpoint_interval;
    let mut trainer = Trainer::new(state, mesh, frames)?;
    while !trainer.is_done() {
        let r = trainer.step()?;
        writeln!(log, "{}", r.csv_row()).map_err(|e| io(&out.log, e))?;
        for row in event_rows(&r) {
            writeln!(events, "{row}").map_err(|e| io(&out.events, e))?;
        }
        on_step(&r);
        if interval > 0 && r.iteration % interval == 0 {
            checkpoint_save(&trainer.state, &out.checkpoint)?;
        }
    }
    log.flush().map_err(|e| io(&out.log, e))?;
    events.flush().map_err(|e| io(&out.events, e))?;
    checkpoint_save(&trainer.state, &out.checkpoint)?;
    Ok(TrainOutputs { final_iteration: trainer.state.iteration, ..out })
}
