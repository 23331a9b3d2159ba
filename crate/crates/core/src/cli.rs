//! Command-line front end. [`run`] maps every outcome to an exit code:
//! 0 on success, 2 on a usage error, 1 on a runtime error. Runtime errors
//! print one JSON object on stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::io::{
    export_ply, load_dataset, synth_generate, Dataset, IoError, PlyFormat, PoseSweep, Split, SyntheticRigSpec,
};
use crate::loss::{psnr, ssim, SsimConfig};
use crate::raster::{Camera, Image};
use crate::rig::Pose;
use crate::train::{checkpoint_load, train_to_dir, TrainConfig, TrainError, TrainState};

#[derive(Debug, Parser)]
#[command(name = "meshsplat", version, about = "Mesh-bound Gaussian splat avatars")]
pub struct Cli {
    /// Force single-threaded execution.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Overrides the seed of the config or synthetic texture.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic tube-rig dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// JSON file with a synthetic rig spec; flags below override it.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        segments: Option<usize>,
        #[arg(long)]
        poses: Option<usize>,
        #[arg(long)]
        test_poses: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        bulge: Option<f64>,
    },
    /// Train an avatar on the training split of a dataset.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured iteration count.
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Render one dataset frame from a checkpoint.
    Render {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        frame: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the unquantized image as a raw float dump.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Render a pose sequence with the camera of a dataset frame.
    Animate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// JSON array of poses.
        #[arg(long)]
        poses: PathBuf,
        #[arg(long, default_value_t = 0)]
        camera_frame: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-frame and mean PSNR/SSIM on a split, written as CSV.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the posed splats of a dataset frame as PLY.
    ExportPly {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ascii: bool,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("frame {frame} is out of range: the dataset has {count} frames")]
    FrameOutOfRange { frame: usize, count: usize },
    #[error("split {0:?} has no frames")]
    EmptySplit(SplitArg),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::FrameOutOfRange { .. } => "frame_out_of_range",
            CliError::EmptySplit(_) => "empty_split",
            CliError::Input { .. } => "bad_input",
            CliError::Io(IoError::Missing { .. }) => "missing_file",
            CliError::Io(_) => "dataset",
            CliError::Train(TrainError::Checkpoint(_)) => "checkpoint",
            CliError::Train(_) => "training",
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let input = |message: String| CliError::Input { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| input(e.to_string()))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input { path: path.display().to_string(), message: e.to_string() })
}

fn load_checkpoint(path: &Path) -> Result<TrainState, CliError> {
    checkpoint_load(path).map_err(|e| CliError::Train(e.into()))
}

fn frame_camera(ds: &Dataset, frame: usize) -> Result<(&Camera, &Pose), CliError> {
    let f = ds.frames.get(frame).ok_or(CliError::FrameOutOfRange { frame, count: ds.frames.len() })?;
    Ok((&f.entry.camera, &f.entry.pose))
}

/// Per-frame metrics of a split as CSV rows, followed by a `mean` row.
pub fn evaluate(state: &TrainState, ds: &Dataset, split: SplitArg) -> Result<String, CliError> {
    let mut csv = String::from("frame,image,psnr,ssim\n");
    let (mut sum_p, mut sum_s, mut n) = (0.0, 0.0, 0usize);
    let cfg = &state.config;
    for (i, f) in ds.frames.iter().enumerate() {
        let keep = match split {
            SplitArg::All => true,
            SplitArg::Train => f.entry.split == Split::Train,
            SplitArg::Test => f.entry.split == Split::Test,
        };
        if !keep {
            continue;
        }
        let img = state.avatar.render(&ds.mesh, &f.entry.pose, &f.entry.camera, &cfg.raster)?.color;
        let p = psnr(&img, &f.image).map_err(TrainError::from)?;
        let s = ssim(&img, &f.image, &SsimConfig::default()).map_err(TrainError::from)?;
        csv.push_str(&format!("{i},{},{p:.4},{s:.6}\n", f.entry.image));
        sum_p += p;
        sum_s += s;
        n += 1;
    }
    if n == 0 {
        return Err(CliError::EmptySplit(split));
    }
    csv.push_str(&format!("mean,,{:.4},{:.6}\n", sum_p / n as f64, sum_s / n as f64));
    Ok(csv)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { out, spec, segments, poses, test_poses, size, bulge } => {
            let mut s: SyntheticRigSpec = match spec {
                Some(p) => read_json(&p)?,
                None => SyntheticRigSpec::default(),
            };
            if let Some(v) = segments {
                s.segment_count = v;
            }
            let sweep = PoseSweep {
                train_poses: poses.unwrap_or(s.sweep.train_poses),
                test_poses: test_poses.unwrap_or(s.sweep.test_poses),
                ..s.sweep
            };
            s.sweep = sweep;
            if let Some(v) = size {
                s.width = v;
                s.height = v;
                s.focal *= v as f64 / 128.0;
            }
            if let Some(v) = bulge {
                s.bulge = v;
            }
            if let Some(seed) = cli.seed {
                s.texture_seed = seed;
            }
            let out = synth_generate(&s, &out)?;
            println!("{}", out.manifest.display());
        }
        Command::Train { manifest, config, out, iters } => {
            let mut cfg = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| CliError::Input { path: p.display().to_string(), message: e.to_string() })?;
                    TrainConfig::from_json(&text)?
                }
                None => TrainConfig::default(),
            };
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(n) = iters {
                cfg.schedule.density_control_end = cfg.schedule.density_control_end.min(n);
                cfg.schedule.total_iters = n;
            }
            let ds = load_dataset(&manifest)?;
            let frames = ds.train_frames();
            let state = TrainState::new(cfg, &ds.mesh)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| CliError::Input { path: out.display().to_string(), message: e.to_string() })?;
            write_text(&out.join("config.json"), &state.config.to_json())?;
            let report = train_to_dir(state, &ds.mesh, &frames, &out, |_| {})?;
            println!("{}", report.checkpoint.display());
        }
        Command::Render { checkpoint, manifest, frame, out, raw } => {
            let state = load_checkpoint(&checkpoint)?;
            let ds = load_dataset(&manifest)?;
            let (cam, pose) = frame_camera(&ds, frame)?;
            let img = state.avatar.render(&ds.mesh, pose, cam, &state.config.raster)?.color;
            img.save_png(&out).map_err(IoError::from)?;
            if let Some(raw) = raw {
                let f = std::fs::File::create(&raw)
                    .map_err(|e| CliError::Input { path: raw.display().to_string(), message: e.to_string() })?;
                img.write_raw(std::io::BufWriter::new(f))
                    .map_err(|e| CliError::Input { path: raw.display().to_string(), message: e.to_string() })?;
            }
        }
        Command::Animate { checkpoint, manifest, poses, camera_frame, out } => {
            let state = load_checkpoint(&checkpoint)?;
            let ds = load_dataset(&manifest)?;
            let (cam, _) = frame_camera(&ds, camera_frame)?;
            let poses: Vec<Pose> = read_json(&poses)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| CliError::Input { path: out.display().to_string(), message: e.to_string() })?;
            for (i, pose) in poses.iter().enumerate() {
                let img: Image = state.avatar.render(&ds.mesh, pose, cam, &state.config.raster)?.color;
                img.save_png(&out.join(format!("frame_{i:04}.png"))).map_err(IoError::from)?;
            }
        }
        Command::Eval { checkpoint, manifest, split, out } => {
            let state = load_checkpoint(&checkpoint)?;
            let ds = load_dataset(&manifest)?;
            let csv = evaluate(&state, &ds, split)?;
            match out {
                Some(p) => write_text(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::ExportPly { checkpoint, manifest, frame, out, ascii } => {
            let state = load_checkpoint(&checkpoint)?;
            let ds = load_dataset(&manifest)?;
            let (_, pose) = frame_camera(&ds, frame)?;
            let format = if ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
            export_ply(&state.avatar, &ds.mesh, pose, &out, format)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cli.deterministic {
        // Rendering is order-independent already; one thread removes any
        // remaining scheduling variation from timing-sensitive callers.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let line = serde_json::json!({ "error": e.code(), "message": e.to_string() });
            let _ = writeln!(std::io::stderr(), "{line}");
            1
        }
    }
}
