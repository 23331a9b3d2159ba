//! Generates a synthetic tube-rig dataset and summarizes it.
//!
//! `cargo run --release --example synth_dataset -- [out_dir]`

use meshsplat::io::{load_dataset, synth_generate, Split, SyntheticRigSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("meshsplat-synth"));
    let spec = SyntheticRigSpec::default();
    let generated = synth_generate(&spec, &out)?;
    let ds = load_dataset(&generated.manifest)?;
    println!("manifest  {}", generated.manifest.display());
    println!("rig       {} vertices, {} faces, {} joints", ds.mesh.vertices.len(), ds.mesh.faces.len(), ds.mesh.joint_count());
    println!("frames    {} train, {} test", ds.split(Split::Train).count(), ds.split(Split::Test).count());
    println!("truth     {} splats (one per face)", generated.truth.splats.len());
    Ok(())
}
