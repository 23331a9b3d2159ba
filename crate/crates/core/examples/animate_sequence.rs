//! Animates a trained avatar: trains briefly, then renders a pose sequence
//! that bends the tube back and forth.
//!
//! `cargo run --release --example animate_sequence -- [frames] [out_dir]`

use meshsplat::gauss::Vec3;
use meshsplat::io::{load_dataset, synth_generate, SyntheticRigSpec};
use meshsplat::rig::Pose;
use meshsplat::train::{TrainConfig, TrainState, Trainer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12);
    let out = std::env::args().nth(2).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("meshsplat-anim"));
    let spec = SyntheticRigSpec { segment_count: 1, segment_length: 1.0, width: 64, height: 64, focal: 125.0, ..Default::default() };
    let ds = load_dataset(&synth_generate(&spec, &out.join("data"))?.manifest)?;
    let frames = ds.train_frames();

    let mut cfg = TrainConfig::default();
    cfg.init.sh_degree = 0;
    cfg.schedule.total_iters = 600;
    cfg.schedule.density_control_end = 0;
    let mut trainer = Trainer::new(TrainState::new(cfg.clone(), &ds.mesh)?, &ds.mesh, &frames)?;
    while !trainer.is_done() {
        trainer.step()?;
    }

    let anim = out.join("frames");
    std::fs::create_dir_all(&anim)?;
    for i in 0..count {
        let bend = 0.6 * (std::f64::consts::TAU * i as f64 / count as f64).sin();
        let pose = Pose { root_translation: Vec3::zeros(), joint_rotations: vec![Vec3::zeros(), Vec3::new(0.0, 0.0, bend)] };
        let img = trainer.state.avatar.render(&ds.mesh, &pose, &spec.camera(), &cfg.raster)?.color;
        img.save_png(&anim.join(format!("frame_{i:04}.png")))?;
    }
    println!("wrote {count} frames to {}", anim.display());
    Ok(())
}
