//! Trains with and without the pose-conditioned rectifier on a rig whose
//! surface bulges with the bend angle, and compares held-out PSNR.
//!
//! `cargo run --release --example rectifier_ablation -- [iterations]`

use meshsplat::io::{load_dataset, synth_generate, PoseSweep, Split, SyntheticRigSpec};
use meshsplat::loss::psnr;
use meshsplat::train::{TrainConfig, TrainState, Trainer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iters: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3000);
    let dir = tempfile::tempdir()?;
    let spec = SyntheticRigSpec {
        segment_count: 1,
        segment_length: 1.0,
        rings_per_segment: 8,
        bulge: 1.0,
        sweep: PoseSweep { spin_turns: 0.0, ..Default::default() },
        ..Default::default()
    };
    let ds = load_dataset(&synth_generate(&spec, dir.path())?.manifest)?;
    let frames = ds.train_frames();

    for rectifier in [true, false] {
        let mut cfg = TrainConfig::default();
        cfg.init.sh_degree = 0;
        cfg.use_rectifier = rectifier;
        cfg.schedule.total_iters = iters;
        cfg.schedule.density_control_end = 0;
        let mut trainer = Trainer::new(TrainState::new(cfg.clone(), &ds.mesh)?, &ds.mesh, &frames)?;
        while !trainer.is_done() {
            trainer.step()?;
        }
        let mut scores = Vec::new();
        for (_, f) in ds.split(Split::Test) {
            let img = trainer.state.avatar.render(&ds.mesh, &f.entry.pose, &f.entry.camera, &cfg.raster)?.color;
            scores.push(psnr(&img, &f.image)?);
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        println!("{:<16} held-out PSNR {mean:.2} dB", if rectifier { "with rectifier" } else { "mesh only" });
    }
    Ok(())
}
