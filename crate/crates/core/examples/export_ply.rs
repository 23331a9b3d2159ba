//! Exports posed splats as a PLY point cloud and reads it back.
//!
//! `cargo run --release --example export_ply -- [out.ply] [--ascii]`

use meshsplat::io::{export_ply, read_ply, synth_generate, PlyFormat, SyntheticRigSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ascii = args.iter().any(|a| a == "--ascii");
    let out = args.iter().find(|a| !a.starts_with("--")).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("meshsplat-splats.ply"));
    let dir = tempfile::tempdir()?;
    let spec = SyntheticRigSpec::default();
    let generated = synth_generate(&spec, dir.path())?;

    let format = if ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
    let n = export_ply(&generated.truth, &generated.mesh, &spec.pose_at(0.25), &out, format)?;
    let (_, vertices) = read_ply(&out)?;
    let first = &vertices[0];
    println!("wrote {n} splats to {} as {format:?}", out.display());
    println!("first splat at {:?}, rotation {:?}", first.position, first.rotation);
    Ok(())
}
