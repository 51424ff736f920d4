//! Skeletal motion: BVH ingestion, rotation-matrix features, normalization,
//! forward kinematics and time derivatives.
//!
//! Rotations are stored per frame and joint as row-major 3×3 matrices, so a
//! sequence of `T` frames over `J` joints carries `T·J·9` values. The root
//! translation is kept separately.

mod bvh;
mod kinematics;
mod normalize;
pub mod rotation;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bvh::{emit_bvh, parse_bvh, parse_bvh_file, read_bvh_str};
pub use kinematics::{finite_difference, forward_kinematics, joint_speeds};
pub use normalize::{canonicalize, normalize, FeatureNorm, NormalizedMotion};

/// Number of scalar features per joint per frame (a flattened 3×3 matrix).
pub const ROT_DIM: usize = 9;

/// The fifteen upper-body joints used for gesture features.
pub const UPPER_BODY_JOINTS: [&str; 15] = [
    "Spine",
    "Spine1",
    "Spine2",
    "Spine3",
    "Neck",
    "Neck1",
    "Head",
    "RightShoulder",
    "RightArm",
    "RightForeArm",
    "RightHand",
    "LeftShoulder",
    "LeftArm",
    "LeftForeArm",
    "LeftHand",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn parse(tag: &str) -> Option<Self> {
        Some(match tag {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }

    /// Axis index (0 = X, 1 = Y, 2 = Z) for rotation channels.
    pub fn rotation_axis(self) -> Option<usize> {
        match self {
            Channel::Xrotation => Some(0),
            Channel::Yrotation => Some(1),
            Channel::Zrotation => Some(2),
            _ => None,
        }
    }

    pub fn position_axis(self) -> Option<usize> {
        match self {
            Channel::Xposition => Some(0),
            Channel::Yposition => Some(1),
            Channel::Zposition => Some(2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub joint_names: Vec<String>,
    /// Parent index per joint; `None` for the root.
    pub parents: Vec<Option<usize>>,
    pub offsets: Vec<[f64; 3]>,
    pub channels: Vec<Vec<Channel>>,
    /// Optional end-site offset per joint, kept for faithful re-emission.
    #[serde(default)]
    pub end_sites: Vec<Option<[f64; 3]>>,
}

impl Skeleton {
    /// Checks the rooted-tree invariant and finite offsets.
    pub fn validate(&self) -> Result<()> {
        let n = self.joint_names.len();
        if n == 0 {
            return Err(Error::InvalidArgument("skeleton has no joints".into()));
        }
        if self.parents.len() != n || self.offsets.len() != n || self.channels.len() != n {
            return Err(Error::InvalidArgument(
                "skeleton field lengths disagree".into(),
            ));
        }
        if !self.end_sites.is_empty() && self.end_sites.len() != n {
            return Err(Error::InvalidArgument("end-site table length".into()));
        }
        let roots = self.parents.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::InvalidArgument(format!(
                "skeleton must have exactly one root, found {roots}"
            )));
        }
        for (j, p) in self.parents.iter().enumerate() {
            if let Some(p) = *p {
                // Parents must precede children; this rules out cycles.
                if p >= j {
                    return Err(Error::InvalidArgument(format!(
                        "joint {j} has parent {p} that does not precede it"
                    )));
                }
            }
        }
        if self.offsets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("skeleton offsets"));
        }
        Ok(())
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn root(&self) -> usize {
        self.parents.iter().position(|p| p.is_none()).unwrap_or(0)
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    /// Total number of channels per motion frame.
    pub fn channel_count(&self) -> usize {
        self.channels.iter().map(Vec::len).sum()
    }

    /// Restricts the skeleton to `names`, reparenting each kept joint onto its
    /// nearest kept ancestor. Offsets of dropped intermediate joints are summed
    /// into the child, which is exact when the dropped joints carry identity
    /// rotations. Returns the reduced skeleton and the kept source indices.
    pub fn subset(&self, names: &[impl AsRef<str>]) -> Result<(Skeleton, Vec<usize>)> {
        let mut keep = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let idx = self
                .find(name)
                .ok_or_else(|| Error::InvalidArgument(format!("joint `{name}` not in skeleton")))?;
            keep.push(idx);
        }
        keep.sort_unstable();
        keep.dedup();
        let mut new_index = vec![None; self.joint_count()];
        for (n, &j) in keep.iter().enumerate() {
            new_index[j] = Some(n);
        }
        let mut out = Skeleton {
            joint_names: Vec::with_capacity(keep.len()),
            parents: Vec::with_capacity(keep.len()),
            offsets: Vec::with_capacity(keep.len()),
            channels: Vec::with_capacity(keep.len()),
            end_sites: Vec::with_capacity(keep.len()),
        };
        for &j in &keep {
            let mut offset = self.offsets[j];
            let mut parent = self.parents[j];
            while let Some(p) = parent {
                if new_index[p].is_some() {
                    break;
                }
                for a in 0..3 {
                    offset[a] += self.offsets[p][a];
                }
                parent = self.parents[p];
            }
            let new_parent = parent.and_then(|p| new_index[p]);
            let mut channels: Vec<Channel> = self.channels[j]
                .iter()
                .copied()
                .filter(|c| c.rotation_axis().is_some())
                .collect();
            if new_parent.is_none() {
                if channels.is_empty() {
                    channels = vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];
                }
                let mut root = vec![Channel::Xposition, Channel::Yposition, Channel::Zposition];
                root.extend(channels);
                channels = root;
            }
            out.joint_names.push(self.joint_names[j].clone());
            out.parents.push(new_parent);
            out.offsets.push(if new_parent.is_none() { [0.0; 3] } else { offset });
            out.channels.push(channels);
            out.end_sites.push(self.end_sites.get(j).copied().flatten());
        }
        out.validate()?;
        Ok((out, keep))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub fps: f64,
    /// `frames × joints × 9`, row-major rotation matrices.
    pub rotations: Vec<f64>,
    /// `frames × 3`.
    pub root_positions: Vec<f64>,
    pub skeleton: Arc<Skeleton>,
}

impl MotionSequence {
    pub fn new(
        fps: f64,
        rotations: Vec<f64>,
        root_positions: Vec<f64>,
        skeleton: Arc<Skeleton>,
    ) -> Result<Self> {
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        let j = skeleton.joint_count();
        if rotations.is_empty() || rotations.len() % (j * ROT_DIM) != 0 {
            return Err(Error::DimensionMismatch {
                expected: j * ROT_DIM,
                actual: rotations.len(),
                context: "rotation buffer per frame",
            });
        }
        let frames = rotations.len() / (j * ROT_DIM);
        if root_positions.len() != frames * 3 {
            return Err(Error::DimensionMismatch {
                expected: frames * 3,
                actual: root_positions.len(),
                context: "root positions",
            });
        }
        Ok(MotionSequence {
            fps,
            rotations,
            root_positions,
            skeleton,
        })
    }

    /// All-identity motion with the root at the origin.
    pub fn identity(fps: f64, frames: usize, skeleton: Arc<Skeleton>) -> Result<Self> {
        let j = skeleton.joint_count();
        let mut rotations = Vec::with_capacity(frames * j * ROT_DIM);
        for _ in 0..frames * j {
            rotations.extend_from_slice(&rotation::IDENTITY);
        }
        MotionSequence::new(fps, rotations, vec![0.0; frames * 3], skeleton)
    }

    pub fn frames(&self) -> usize {
        self.root_positions.len() / 3
    }

    pub fn joints(&self) -> usize {
        self.skeleton.joint_count()
    }

    /// Feature width of one frame (`J·9`).
    pub fn frame_dim(&self) -> usize {
        self.joints() * ROT_DIM
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let w = self.frame_dim();
        &self.rotations[t * w..(t + 1) * w]
    }

    pub fn rotation(&self, t: usize, j: usize) -> [f64; 9] {
        let base = (t * self.joints() + j) * ROT_DIM;
        let mut m = [0.0; 9];
        m.copy_from_slice(&self.rotations[base..base + ROT_DIM]);
        m
    }

    pub fn set_rotation(&mut self, t: usize, j: usize, m: &[f64; 9]) {
        let base = (t * self.joints() + j) * ROT_DIM;
        self.rotations[base..base + ROT_DIM].copy_from_slice(m);
    }

    pub fn root_position(&self, t: usize) -> [f64; 3] {
        [
            self.root_positions[3 * t],
            self.root_positions[3 * t + 1],
            self.root_positions[3 * t + 2],
        ]
    }

    /// Largest deviation of any rotation block from orthonormality, measured
    /// as `max(‖RᵀR − I‖∞, |det R − 1|)`.
    pub fn max_orthonormality_error(&self) -> f64 {
        self.rotations
            .chunks_exact(ROT_DIM)
            .map(|m| {
                let m: &[f64; 9] = m.try_into().unwrap();
                rotation::orthonormality_error(m)
            })
            .fold(0.0, f64::max)
    }

    /// Keeps only the joints in `names`; see [`Skeleton::subset`].
    pub fn select_joints(&self, names: &[impl AsRef<str>]) -> Result<MotionSequence> {
        let (skeleton, keep) = self.skeleton.subset(names)?;
        let frames = self.frames();
        let mut rotations = Vec::with_capacity(frames * keep.len() * ROT_DIM);
        for t in 0..frames {
            for &j in &keep {
                rotations.extend_from_slice(&self.rotation(t, j));
            }
        }
        MotionSequence::new(
            self.fps,
            rotations,
            self.root_positions.clone(),
            Arc::new(skeleton),
        )
    }

    /// Frames `[start, end)` as a new sequence.
    pub fn slice_frames(&self, start: usize, end: usize) -> Result<MotionSequence> {
        if start >= end || end > self.frames() {
            return Err(Error::InvalidArgument(format!(
                "frame range {start}..{end} outside 0..{}",
                self.frames()
            )));
        }
        let w = self.frame_dim();
        MotionSequence::new(
            self.fps,
            self.rotations[start * w..end * w].to_vec(),
            self.root_positions[start * 3..end * 3].to_vec(),
            self.skeleton.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionSequence {
    pub fps: f64,
    pub joints: usize,
    /// `frames × joints × 3`.
    pub positions: Vec<f64>,
}

impl PositionSequence {
    pub fn frames(&self) -> usize {
        if self.joints == 0 {
            0
        } else {
            self.positions.len() / (self.joints * 3)
        }
    }

    pub fn position(&self, t: usize, j: usize) -> [f64; 3] {
        let b = (t * self.joints + j) * 3;
        [self.positions[b], self.positions[b + 1], self.positions[b + 2]]
    }

    /// Frame `t` flattened to `joints·3` values.
    pub fn frame(&self, t: usize) -> &[f64] {
        let w = self.joints * 3;
        &self.positions[t * w..(t + 1) * w]
    }
}
