//! Renders the ground-truth avatar of a synthetic rig at a chosen phase of
//! the pose sweep, then checks the tiled rasterizer against the naive one.
//!
//! `cargo run --release --example render_frame -- [phase in 0..1] [out.png]`

use meshsplat::io::{synth_generate, SyntheticRigSpec};
use meshsplat::raster::{naive_rasterize, RasterConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let phase: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.3);
    let out = std::env::args().nth(2).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("meshsplat-frame.png"));
    let spec = SyntheticRigSpec::default();
    let dir = tempfile::tempdir()?;
    let generated = synth_generate(&spec, dir.path())?;
    let (truth, mesh) = (generated.truth, generated.mesh);
    let (cam, cfg) = (spec.camera(), RasterConfig::default());

    let posed = truth.pose(&mesh, &spec.pose_at(phase))?;
    let (tiled, cache) = truth.render_posed(&posed, &cam, &cfg);
    let naive = naive_rasterize(&cache.projected, &cam, &cfg);
    let diff = tiled.color.data.iter().zip(&naive.color.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    tiled.color.save_png(&out)?;
    println!("wrote {} ({} splats), max |tiled - naive| = {diff:e}", out.display(), truth.splats.len());
    Ok(())
}
