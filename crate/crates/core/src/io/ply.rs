//! Splat point clouds in the PLY layout common splat viewers read: world
//! position, zero normal, SH DC coefficients, opacity as a logit, log world
//! scales and a `(w, x, y, z)` world rotation, all `float`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{io_error, IoError};
use crate::gauss::Vec3;
use crate::raster::Camera;
use crate::rig::{Pose, RiggedMesh};
use crate::train::Avatar;

pub const PLY_PROPERTIES: [&str; 17] = [
    "x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2", "rot_0",
    "rot_1", "rot_2", "rot_3",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

/// One exported splat, in world space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlyVertex {
    pub position: [f32; 3],
    pub f_dc: [f32; 3],
    pub opacity_logit: f32,
    pub log_scale: [f32; 3],
    pub rotation: [f32; 4],
}

impl PlyVertex {
    fn values(&self) -> [f32; 17] {
        let p = self.position;
        let c = self.f_dc;
        let s = self.log_scale;
        let r = self.rotation;
        [p[0], p[1], p[2], 0.0, 0.0, 0.0, c[0], c[1], c[2], self.opacity_logit, s[0], s[1], s[2], r[0], r[1], r[2], r[3]]
    }

    fn from_values(v: &[f32]) -> Self {
        Self {
            position: [v[0], v[1], v[2]],
            f_dc: [v[6], v[7], v[8]],
            opacity_logit: v[9],
            log_scale: [v[10], v[11], v[12]],
            rotation: [v[13], v[14], v[15], v[16]],
        }
    }
}

/// Poses the avatar, applies the rectifier and writes the resulting world
/// splats. Returns the number of vertices written.
pub fn export_ply(avatar: &Avatar, mesh: &RiggedMesh, pose: &Pose, path: &Path, format: PlyFormat) -> Result<usize, IoError> {
    let posed = avatar.pose(mesh, pose)?;
    let vertices: Vec<PlyVertex> = avatar
        .splats
        .iter()
        .zip(&posed.rectified)
        .map(|(s, r)| PlyVertex {
            position: r.mu.map(|v| v as f32).into(),
            f_dc: [s.sh_coeffs[0] as f32, s.sh_coeffs[1] as f32, s.sh_coeffs[2] as f32],
            opacity_logit: s.opacity_logit as f32,
            log_scale: r.scale.map(|v| v.ln() as f32).into(),
            rotation: r.rotation.to_array().map(|v| v as f32),
        })
        .collect();
    write_ply(&vertices, path, format)?;
    Ok(vertices.len())
}

fn write_ply(vertices: &[PlyVertex], path: &Path, format: PlyFormat) -> Result<(), IoError> {
    let mut out = Vec::new();
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    out.extend_from_slice(format!("ply\nformat {fmt} 1.0\nelement vertex {}\n", vertices.len()).as_bytes());
    for p in PLY_PROPERTIES {
        out.extend_from_slice(format!("property float {p}\n").as_bytes());
    }
    out.extend_from_slice(b"end_header\n");
    for v in vertices {
        match format {
            PlyFormat::Ascii => {
                let row: Vec<String> = v.values().iter().map(|x| format!("{x:?}")).collect();
                out.extend_from_slice(row.join(" ").as_bytes());
                out.push(b'\n');
            }
            PlyFormat::BinaryLittleEndian => {
                for x in v.values() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    f.write_all(&out).map_err(|e| io_error(path, e))
}

/// Reads files written by [`export_ply`]. Other property layouts are
/// rejected.
pub fn read_ply(path: &Path) -> Result<(PlyFormat, Vec<PlyVertex>), IoError> {
    let bad = |m: &str| IoError::Ply { path: path.display().to_string(), message: m.to_string() };
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut next = |reader: &mut BufReader<std::fs::File>| -> Result<String, IoError> {
        line.clear();
        reader.read_line(&mut line).map_err(|e| io_error(path, e))?;
        Ok(line.trim_end().to_string())
    };
    if next(&mut reader)? != "ply" {
        return Err(bad("missing ply signature"));
    }
    let format = match next(&mut reader)?.as_str() {
        "format ascii 1.0" => PlyFormat::Ascii,
        "format binary_little_endian 1.0" => PlyFormat::BinaryLittleEndian,
        _ => return Err(bad("unsupported format line")),
    };
    let count: usize = next(&mut reader)?
        .strip_prefix("element vertex ")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad("missing vertex element"))?;
    for p in PLY_PROPERTIES {
        if next(&mut reader)? != format!("property float {p}") {
            return Err(bad(&format!("expected property {p}")));
        }
    }
    if next(&mut reader)? != "end_header" {
        return Err(bad("missing end_header"));
    }
    let mut vertices = Vec::with_capacity(count);
    match format {
        PlyFormat::Ascii => {
            for _ in 0..count {
                let row = next(&mut reader)?;
                let vals: Vec<f32> = row.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("bad number"))?;
                if vals.len() != PLY_PROPERTIES.len() {
                    return Err(bad("wrong number of values in row"));
                }
                vertices.push(PlyVertex::from_values(&vals));
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let mut buf = vec![0u8; count * PLY_PROPERTIES.len() * 4];
            reader.read_exact(&mut buf).map_err(|_| bad("vertex data ends early"))?;
            for chunk in buf.chunks_exact(PLY_PROPERTIES.len() * 4) {
                let vals: Vec<f32> = chunk.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
                vertices.push(PlyVertex::from_values(&vals));
            }
        }
    }
    Ok((format, vertices))
}

/// Projects exported positions, for quick sanity checks of a file.
pub fn ply_pixel(v: &PlyVertex, cam: &Camera) -> Option<[f64; 2]> {
    let p = cam.to_camera(&Vec3::new(f64::from(v.position[0]), f64::from(v.position[1]), f64::from(v.position[2])));
    (p.z > 0.0).then(|| [cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy])
}
