//! Trains briefly and reports per-frame PSNR and SSIM on held-out poses,
//! in the same CSV layout as the `eval` subcommand.
//!
//! `cargo run --release --example evaluate_metrics -- [iterations]`

use meshsplat::cli::{evaluate, SplitArg};
use meshsplat::io::{load_dataset, synth_generate, SyntheticRigSpec};
use meshsplat::train::{TrainConfig, TrainState, Trainer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iters: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(800);
    let dir = tempfile::tempdir()?;
    let spec = SyntheticRigSpec { segment_count: 1, segment_length: 1.0, width: 64, height: 64, focal: 125.0, ..Default::default() };
    let ds = load_dataset(&synth_generate(&spec, dir.path())?.manifest)?;
    let frames = ds.train_frames();

    let mut cfg = TrainConfig::default();
    cfg.init.sh_degree = 0;
    cfg.schedule.total_iters = iters;
    cfg.schedule.density_control_end = 0;
    let mut trainer = Trainer::new(TrainState::new(cfg, &ds.mesh)?, &ds.mesh, &frames)?;
    while !trainer.is_done() {
        trainer.step()?;
    }
    print!("{}", evaluate(&trainer.state, &ds, SplitArg::Test)?);
    Ok(())
}
