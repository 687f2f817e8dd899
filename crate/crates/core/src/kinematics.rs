//! Joint tree construction and forward kinematics.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{axis_angle_matrix, Frame};
use crate::model::{ArticulatedObject, Articulation, JointType};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("joints form a cycle through parts {0:?}")]
    KinematicCycle(Vec<String>),
    #[error("part '{0}' is the child of more than one joint")]
    MultipleParents(String),
    #[error("more than one part is never a joint child: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("object has no root part")]
    NoRoot,
    #[error("pose references unknown joint '{0}'")]
    UnknownJointInPose(String),
    #[error("joint '{0}' mimics another joint and cannot be posed directly")]
    MimicSetDirectly(String),
    #[error("joint '{0}' is fixed and cannot be posed")]
    FixedJointInPose(String),
    #[error("pose value for joint '{0}' is not finite")]
    NonFinitePosition(String),
}

impl KinematicsError {
    pub fn code(&self) -> &'static str {
        match self {
            KinematicsError::KinematicCycle(_) => "kinematic_cycle",
            KinematicsError::MultipleParents(_) => "multiple_parents",
            KinematicsError::MultipleRoots(_) => "multiple_roots",
            KinematicsError::NoRoot => "no_root",
            KinematicsError::UnknownJointInPose(_) => "unknown_joint_in_pose",
            KinematicsError::MimicSetDirectly(_) => "mimic_set_directly",
            KinematicsError::FixedJointInPose(_) => "fixed_joint_in_pose",
            KinematicsError::NonFinitePosition(_) => "invalid_pose",
        }
    }
}

/// Joint name to scalar position (radians or meters).
pub type PoseConfig = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildLink {
    pub joint: String,
    pub child: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTree {
    root: String,
    children: BTreeMap<String, Vec<ChildLink>>,
    order: Vec<String>,
    joints: Vec<Articulation>,
    joint_index: HashMap<String, usize>,
    parent_joint: HashMap<String, usize>,
}

/// A requested position that fell outside the joint range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampNote {
    pub joint: String,
    pub requested: f64,
    pub applied: f64,
}

impl std::fmt::Display for ClampNote {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "pose value {} for joint '{}' is outside its limits; clamped to {}",
            self.requested, self.joint, self.applied
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosedFrames {
    pub frames: BTreeMap<String, Frame>,
    /// Resolved position of every joint, mimics and fixed joints included.
    pub positions: BTreeMap<String, f64>,
    pub clamped: Vec<ClampNote>,
}

impl PosedFrames {
    pub fn frame(&self, part: &str) -> Option<&Frame> {
        self.frames.get(part)
    }
}

pub fn build_kinematic_tree(obj: &ArticulatedObject) -> Result<KinematicTree, KinematicsError> {
    let joints = obj.joints().to_vec();
    let mut parent_joint: HashMap<String, usize> = HashMap::new();
    for (i, j) in joints.iter().enumerate() {
        if parent_joint.insert(j.child.clone(), i).is_some() {
            return Err(KinematicsError::MultipleParents(j.child.clone()));
        }
    }
    // Every part has at most one parent, so walking upward either ends at a
    // root or revisits a part on the current walk.
    for start in parent_joint.keys() {
        let mut seen = vec![start.clone()];
        let mut cur = start.clone();
        while let Some(&j) = parent_joint.get(&cur) {
            cur = joints[j].parent.clone();
            if let Some(pos) = seen.iter().position(|p| *p == cur) {
                let mut cycle = seen[pos..].to_vec();
                cycle.sort();
                return Err(KinematicsError::KinematicCycle(cycle));
            }
            seen.push(cur.clone());
        }
    }
    let roots: Vec<String> = obj
        .parts()
        .iter()
        .filter(|p| !parent_joint.contains_key(&p.name))
        .map(|p| p.name.clone())
        .collect();
    if roots.is_empty() {
        return Err(KinematicsError::NoRoot);
    }
    if roots.len() > 1 && !joints.is_empty() {
        return Err(KinematicsError::MultipleRoots(roots));
    }

    let mut children: BTreeMap<String, Vec<ChildLink>> = BTreeMap::new();
    for j in &joints {
        children.entry(j.parent.clone()).or_default().push(ChildLink {
            joint: j.name.clone(),
            child: j.child.clone(),
        });
    }
    let mut order = Vec::with_capacity(obj.parts().len());
    let mut visited = HashSet::new();
    // Without joints every part stands alone at the origin.
    for root in &roots {
        let mut queue = VecDeque::from([root.clone()]);
        while let Some(p) = queue.pop_front() {
            if !visited.insert(p.clone()) {
                continue;
            }
            if let Some(cs) = children.get(&p) {
                queue.extend(cs.iter().map(|c| c.child.clone()));
            }
            order.push(p);
        }
    }
    let joint_index = joints
        .iter()
        .enumerate()
        .map(|(i, j)| (j.name.clone(), i))
        .collect();
    Ok(KinematicTree {
        root: roots[0].clone(),
        children,
        order,
        joints,
        joint_index,
        parent_joint,
    })
}

impl KinematicTree {
    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn children(&self, part: &str) -> &[ChildLink] {
        self.children.get(part).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Parts with every parent before its children.
    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn joints(&self) -> &[Articulation] {
        &self.joints
    }

    pub fn joint(&self, name: &str) -> Option<&Articulation> {
        self.joint_index.get(name).map(|&i| &self.joints[i])
    }

    pub fn parent_joint(&self, part: &str) -> Option<&Articulation> {
        self.parent_joint.get(part).map(|&i| &self.joints[i])
    }

    /// True when a joint connects the two parts directly.
    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        self.joints
            .iter()
            .any(|j| (j.parent == a && j.child == b) || (j.parent == b && j.child == a))
    }

    /// Checks a pose against the joint table without evaluating it.
    pub fn check_pose(&self, pose: &PoseConfig) -> Result<(), KinematicsError> {
        for (name, &q) in pose {
            let j = self
                .joint(name)
                .ok_or_else(|| KinematicsError::UnknownJointInPose(name.clone()))?;
            if j.joint_type == JointType::Fixed {
                return Err(KinematicsError::FixedJointInPose(name.clone()));
            }
            if j.mimic.is_some() {
                return Err(KinematicsError::MimicSetDirectly(name.clone()));
            }
            if !q.is_finite() {
                return Err(KinematicsError::NonFinitePosition(name.clone()));
            }
        }
        Ok(())
    }

    /// Positions for every joint in declaration order.
    pub fn resolve_positions(
        &self,
        pose: &PoseConfig,
    ) -> Result<(BTreeMap<String, f64>, Vec<ClampNote>), KinematicsError> {
        self.check_pose(pose)?;
        let mut positions = BTreeMap::new();
        let mut clamped = Vec::new();
        for j in &self.joints {
            let q = if j.joint_type == JointType::Fixed {
                0.0
            } else if let Some(m) = &j.mimic {
                m.multiplier * positions.get(&m.joint).copied().unwrap_or(0.0) + m.offset
            } else {
                let requested = pose.get(&j.name).copied();
                let raw = requested.unwrap_or(0.0);
                match &j.limits {
                    Some(l) => {
                        let q = raw.clamp(l.lower, l.upper);
                        if let Some(r) = requested {
                            if q != r {
                                clamped.push(ClampNote {
                                    joint: j.name.clone(),
                                    requested: r,
                                    applied: q,
                                });
                            }
                        }
                        q
                    }
                    None => raw,
                }
            };
            positions.insert(j.name.clone(), q);
        }
        Ok((positions, clamped))
    }

    pub fn forward_kinematics(&self, pose: &PoseConfig) -> Result<PosedFrames, KinematicsError> {
        let (positions, clamped) = self.resolve_positions(pose)?;
        let mut frames = BTreeMap::new();
        for part in &self.order {
            let frame = match self.parent_joint(part) {
                None => Frame::identity(),
                Some(j) => {
                    let parent = frames[&j.parent];
                    let stage = joint_stage(j, positions[&j.name]);
                    Frame::compose(&parent, &stage)
                }
            };
            frames.insert(part.clone(), frame);
        }
        Ok(PosedFrames {
            frames,
            positions,
            clamped,
        })
    }

    pub fn rest_pose(&self) -> PosedFrames {
        self.forward_kinematics(&PoseConfig::new())
            .expect("the empty pose is always valid")
    }
}

/// Joint origin followed by the motion for position `q`.
pub fn joint_stage(joint: &Articulation, q: f64) -> Frame {
    joint.origin.to_frame().compose(&joint_motion(joint, q))
}

pub fn joint_motion(joint: &Articulation, q: f64) -> Frame {
    match joint.joint_type {
        JointType::Revolute | JointType::Continuous => {
            Frame::from_rotation(axis_angle_matrix(joint.axis, q))
        }
        JointType::Prismatic => Frame::from_translation(joint.axis * q),
        JointType::Fixed => Frame::identity(),
    }
}
