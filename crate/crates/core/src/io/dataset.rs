use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{io_error, IoError};
use crate::raster::{Camera, Image};
use crate::rig::{Pose, RigError, RiggedMesh};
use crate::train::TrainFrame;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One view: image path relative to the manifest, its camera and pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub image: String,
    pub camera: Camera,
    pub pose: Pose,
    pub split: Split,
}

/// On-disk dataset description.
///
/// ```json
/// { "version": 1, "rig": "rig.json",
///   "frames": [ { "image": "frames/train_000.png", "split": "train",
///                 "camera": { "fx": .., "fy": .., "cx": .., "cy": ..,
///                             "width": .., "height": .., "world_to_camera": [[..]] },
///                 "pose": { "root_translation": [x, y, z],
///                           "joint_rotations": [[ax, ay, az], ..] } } ] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub rig: String,
    pub frames: Vec<FrameEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedFrame {
    pub entry: FrameEntry,
    /// Decoded image with values in [0, 1].
    pub image: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    pub mesh: RiggedMesh,
    pub frames: Vec<LoadedFrame>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let manifest: Self = serde_json::from_str(&text).map_err(|e| IoError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if manifest.version != MANIFEST_VERSION {
            return Err(IoError::Version { path: path.display().to_string(), found: manifest.version, expected: MANIFEST_VERSION });
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| io_error(path, e))
    }
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = (usize, &LoadedFrame)> {
        self.frames.iter().enumerate().filter(move |(_, f)| f.entry.split == split)
    }

    pub fn train_frames(&self) -> Vec<TrainFrame> {
        self.split(Split::Train)
            .map(|(_, f)| TrainFrame { image: f.image.clone(), camera: f.entry.camera.clone(), pose: f.entry.pose.clone() })
            .collect()
    }
}

/// Loads a manifest, its rig and every image, validating all cross-file
/// invariants before returning.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset, IoError> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let rig_path = root.join(&manifest.rig);
    let mesh = RiggedMesh::load(&rig_path).map_err(|e| match e {
        RigError::Io { .. } if !rig_path.exists() => IoError::Missing { path: rig_path.display().to_string() },
        e => IoError::Rig { path: rig_path.display().to_string(), source: e },
    })?;
    let mpath = manifest_path.display().to_string();
    for (i, f) in manifest.frames.iter().enumerate() {
        if f.pose.joint_rotations.len() != mesh.joint_count() {
            return Err(IoError::PoseJoints {
                path: mpath,
                frame: i,
                expected: mesh.joint_count(),
                got: f.pose.joint_rotations.len(),
            });
        }
        f.camera.validate().map_err(|e| IoError::Camera { path: mpath.clone(), frame: i, source: e })?;
    }
    let images: Vec<Result<Image, IoError>> = manifest
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let path = root.join(&f.image);
            if !path.exists() {
                return Err(IoError::Missing { path: path.display().to_string() });
            }
            let img = Image::load_png(&path)?;
            if img.width != f.camera.width || img.height != f.camera.height {
                return Err(IoError::Dimension {
                    path: path.display().to_string(),
                    frame: i,
                    image: (img.width, img.height),
                    camera: (f.camera.width, f.camera.height),
                });
            }
            Ok(img)
        })
        .collect();
    let mut frames = Vec::with_capacity(images.len());
    for (entry, img) in manifest.frames.iter().zip(images) {
        frames.push(LoadedFrame { entry: entry.clone(), image: img? });
    }
    Ok(Dataset { root, manifest, mesh, frames })
}
