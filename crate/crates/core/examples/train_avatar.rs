//! Trains an avatar on a small synthetic dataset and writes a checkpoint,
//! a per-iteration CSV log and an event log.
//!
//! `cargo run --release --example train_avatar -- [iterations] [out_dir]`

use meshsplat::io::{load_dataset, synth_generate, SyntheticRigSpec};
use meshsplat::train::{train_to_dir, TrainConfig, TrainState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iters: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let out = std::env::args().nth(2).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("meshsplat-train"));
    let spec = SyntheticRigSpec { segment_count: 1, segment_length: 1.0, rings_per_segment: 8, ..Default::default() };
    let ds = load_dataset(&synth_generate(&spec, &out.join("data"))?.manifest)?;

    let mut cfg = TrainConfig::default();
    cfg.init.sh_degree = 0;
    cfg.schedule.total_iters = iters;
    cfg.schedule.density_control_end = iters.min(cfg.schedule.density_control_end);
    let state = TrainState::new(cfg, &ds.mesh)?;
    let outputs = train_to_dir(state, &ds.mesh, &ds.train_frames(), &out.join("run"), |r| {
        if r.iteration % 100 == 0 {
            println!("iter {:>6}  loss {:.5}  psnr {:6.2}  splats {}", r.iteration, r.loss.total, r.psnr, r.splats);
        }
    })?;
    println!("checkpoint {}", outputs.checkpoint.display());
    Ok(())
}
