use serde::{Deserialize, Serialize};

use super::{RiggedMesh, RigError};
use crate::gauss::{Mat3, Vec3};

/// Width of the body-pose vector fed to the rectifier: 23 joints × 3.
pub const BODY_POSE_WIDTH: usize = 69;

/// Per-frame articulation of a rig.
///
/// `joint_rotations[0]` is the global orientation of the root joint; the
/// remaining entries are local axis-angle rotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub root_translation: Vec3,
    pub joint_rotations: Vec<Vec3>,
}

impl Pose {
    pub fn rest(joints: usize) -> Self {
        Self { root_translation: Vec3::zeros(), joint_rotations: vec![Vec3::zeros(); joints] }
    }

    /// Flattened non-root rotations, zero-padded or truncated to `width`.
    pub fn body_pose_vector(&self, width: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .joint_rotations
            .iter()
            .skip(1)
            .flat_map(|r| [r.x, r.y, r.z])
            .take(width)
            .collect();
        out.resize(width, 0.0);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.root_translation.iter().all(|v| v.is_finite())
            && self.joint_rotations.iter().all(|r| r.iter().all(|v| v.is_finite()))
    }
}

/// Rotation matrix of an axis-angle vector.
pub fn rodrigues(axis_angle: &Vec3) -> Mat3 {
    let theta = axis_angle.norm();
    if theta < 1e-12 {
        return Mat3::identity();
    }
    let k = axis_angle / theta;
    let kx = Mat3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Mat3::identity() + theta.sin() * kx + (1.0 - theta.cos()) * (kx * kx)
}

/// Rigid transform `x ↦ rotation·x + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

/// Per-joint skinning transforms, mapping rest-pose points to posed space
/// (root translation excluded).
pub fn skinning_transforms(mesh: &RiggedMesh, pose: &Pose) -> Result<Vec<RigidTransform>, RigError> {
    let joints = mesh.joint_count();
    if pose.joint_rotations.len() != joints {
        return Err(RigError::JointCountMismatch { expected: joints, got: pose.joint_rotations.len() });
    }
    let mut world: Vec<RigidTransform> = Vec::with_capacity(joints);
    for j in 0..joints {
        let rot = rodrigues(&pose.joint_rotations[j]);
        let rest = mesh.joint_rest_positions[j];
        let g = match mesh.joint_parents[j] {
            p if p < 0 => RigidTransform { rotation: rot, translation: rest },
            p => {
                let parent = world[p as usize];
                let offset = rest - mesh.joint_rest_positions[p as usize];
                RigidTransform {
                    rotation: parent.rotation * rot,
                    translation: parent.apply(&offset),
                }
            }
        };
        world.push(g);
    }
    // Remove the rest-pose joint placement: A = G · [I | -rest].
    Ok(world
        .into_iter()
        .zip(&mesh.joint_rest_positions)
        .map(|(g, rest)| RigidTransform {
            rotation: g.rotation,
            translation: g.translation - g.rotation * rest,
        })
        .collect())
}

/// Linear blend skinning of arbitrary rest-space points that share the
/// mesh's joint layout.
pub fn skin_points(
    rest_points: &[Vec3],
    weights: &[Vec<f64>],
    transforms: &[RigidTransform],
    root_translation: &Vec3,
) -> Vec<Vec3> {
    rest_points
        .iter()
        .zip(weights)
        .map(|(v, row)| {
            let mut acc = Vec3::zeros();
            for (w, t) in row.iter().zip(transforms) {
                if *w != 0.0 {
                    acc += *w * t.apply(v);
                }
            }
            acc + root_translation
        })
        .collect()
}

/// Posed vertex positions.
pub fn pose_mesh(mesh: &RiggedMesh, pose: &Pose) -> Result<Vec<Vec3>, RigError> {
    let transforms = skinning_transforms(mesh, pose)?;
    Ok(skin_points(&mesh.vertices, &mesh.skin_weights, &transforms, &pose.root_translation))
}
