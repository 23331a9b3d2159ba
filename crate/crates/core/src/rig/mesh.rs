use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RigError;
use crate::gauss::Vec3;

/// Tolerance on each skin-weight row summing to one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;
/// Faces with area at or below this (m²) are degenerate.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Template mesh with a linear-blend-skinning rig.
///
/// Serialized as a single JSON object with the keys `vertices`, `faces`,
/// `skin_weights`, `joint_parents` (root is `-1`) and
/// `joint_rest_positions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiggedMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub skin_weights: Vec<Vec<f64>>,
    pub joint_parents: Vec<i64>,
    pub joint_rest_positions: Vec<Vec3>,
}

impl RiggedMesh {
    pub fn joint_count(&self) -> usize {
        self.joint_parents.len()
    }

    pub fn face_vertices(&self, verts: &[Vec3], face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [verts[a], verts[b], verts[c]]
    }

    /// Diagonal of the rest-pose bounding box.
    pub fn extent(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }

    /// Checks every structural invariant of the rig.
    pub fn validate(&self) -> Result<(), RigError> {
        let n = self.vertices.len();
        let joints = self.joint_count();
        if n == 0 || self.faces.is_empty() || joints == 0 {
            return Err(RigError::Empty);
        }
        if self.joint_rest_positions.len() != joints {
            return Err(RigError::JointCountMismatch {
                expected: joints,
                got: self.joint_rest_positions.len(),
            });
        }
        for (j, &p) in self.joint_parents.iter().enumerate() {
            let ok = if j == 0 { p == -1 } else { p >= 0 && (p as usize) < j };
            if !ok {
                return Err(RigError::ParentOrder { joint: j, parent: p });
            }
        }
        if self.skin_weights.len() != n {
            return Err(RigError::WeightRowCount { expected: n, got: self.skin_weights.len() });
        }
        for (vertex, row) in self.skin_weights.iter().enumerate() {
            if row.len() != joints {
                return Err(RigError::WeightRowLength { vertex, expected: joints, got: row.len() });
            }
            if let Some(joint) = row.iter().position(|&w| !(w >= 0.0)) {
                return Err(RigError::NegativeWeight { vertex, joint });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(RigError::WeightRowSum { vertex, sum });
            }
        }
        let mut directed = HashSet::with_capacity(self.faces.len() * 3);
        for (face, tri) in self.faces.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= n) {
                return Err(RigError::FaceIndex { face, index });
            }
            let [a, b, c] = self.face_vertices(&self.vertices, face);
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            if !(area > MIN_FACE_AREA) {
                return Err(RigError::DegenerateFace { face, area });
            }
            // Consistently oriented faces traverse each shared edge in
            // opposite directions, so a repeated directed edge means a flip.
            for k in 0..3 {
                let edge = (tri[k], tri[(k + 1) % 3]);
                if !directed.insert(edge) {
                    return Err(RigError::InconsistentWinding { face, edge });
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads and validates a rig file.
    pub fn load(path: &Path) -> Result<Self, RigError> {
        let text = std::fs::read_to_string(path).map_err(|e| RigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mesh = Self::from_json(&text).map_err(|e| RigError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }
}
