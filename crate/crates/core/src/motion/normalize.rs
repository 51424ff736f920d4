use serde::{Deserialize, Serialize};

use super::kinematics::global_pose;
use super::rotation::{self, axis_rotation};
use super::MotionSequence;
use crate::error::{Error, Result};

/// Floor applied to per-feature standard deviations.
pub const STD_EPS: f64 = 1e-8;

/// Per-feature mean and standard deviation for z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features whose spread fell below [`STD_EPS`] and were clamped.
    pub clamped: Vec<bool>,
}

impl FeatureNorm {
    /// Fits mean/std over the frames of every sequence in `rows`, where each
    /// item is a row-major `frames × dim` buffer.
    pub fn fit<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("feature dimension is zero".into()));
        }
        let mut sum = vec![0.0; dim];
        let mut count = 0usize;
        let buffers: Vec<&[f64]> = rows.into_iter().collect();
        for buf in &buffers {
            if buf.len() % dim != 0 {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: buf.len() % dim,
                    context: "feature rows",
                });
            }
            for frame in buf.chunks_exact(dim) {
                for (s, v) in sum.iter_mut().zip(frame) {
                    *s += v;
                }
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::InsufficientData("no frames to fit normalization".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut var = vec![0.0; dim];
        for buf in &buffers {
            for frame in buf.chunks_exact(dim) {
                for ((acc, v), m) in var.iter_mut().zip(frame).zip(&mean) {
                    *acc += (v - m) * (v - m);
                }
            }
        }
        let mut std = Vec::with_capacity(dim);
        let mut clamped = Vec::with_capacity(dim);
        for v in var {
            let s = (v / count as f64).sqrt();
            if s < STD_EPS {
                std.push(STD_EPS);
                clamped.push(true);
            } else {
                std.push(s);
                clamped.push(false);
            }
        }
        Ok(FeatureNorm { mean, std, clamped })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }

    /// Z-scores a `frames × dim` buffer. Clamped features map to zero.
    pub fn apply(&self, frames: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(frames.len());
        for (i, v) in frames.iter().enumerate() {
            let k = i % d;
            if self.clamped[k] {
                out.push(0.0);
            } else {
                out.push((v - self.mean[k]) / self.std[k]);
            }
        }
        out
    }

    /// Inverse of [`FeatureNorm::apply`]; `values` may span several frames.
    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        let d = self.dim();
        values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.std[i % d] + self.mean[i % d])
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct NormalizedMotion {
    /// Root-centred, facing-aligned motion (still valid rotations).
    pub canonical: MotionSequence,
    /// Z-scored rotation features, `frames × J·9`.
    pub features: Vec<f64>,
    pub norm: FeatureNorm,
}

fn find_ci(names: &[String], candidates: &[&str]) -> Option<usize> {
    candidates.iter().find_map(|c| {
        names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(c))
    })
}

/// Horizontal facing direction at frame 0: `(left − right shoulder) × up`
/// with Y up. Falls back to the root's local +Z axis when no shoulder pair
/// exists in the skeleton.
fn facing_direction(m: &MotionSequence) -> [f64; 3] {
    let sk = &*m.skeleton;
    let left = find_ci(&sk.joint_names, &["LeftShoulder", "LeftArm", "l_shoulder"]);
    let right = find_ci(&sk.joint_names, &["RightShoulder", "RightArm", "r_shoulder"]);
    match (left, right) {
        (Some(l), Some(r)) => {
            let (_, positions) = global_pose(m, 0);
            let a = positions[l];
            let b = positions[r];
            let across = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
            // across × (0, 1, 0)
            [-across[2], 0.0, across[0]]
        }
        _ => {
            let root = m.rotation(0, sk.root());
            let f = rotation::apply(&root, &[0.0, 0.0, 1.0]);
            [f[0], 0.0, f[2]]
        }
    }
}

/// Moves the root to the origin in every frame and rotates the whole sequence
/// about the vertical axis so the frame-0 facing direction is +Z.
pub fn canonicalize(m: &MotionSequence) -> MotionSequence {
    let f = facing_direction(m);
    let mut out = m.clone();
    out.root_positions.iter_mut().for_each(|v| *v = 0.0);
    if f[0].hypot(f[2]) > 1e-12 {
        let yaw = f[0].atan2(f[2]);
        let align = axis_rotation(1, -yaw);
        let root = m.skeleton.root();
        for t in 0..m.frames() {
            let r = rotation::mul(&align, &m.rotation(t, root));
            out.set_rotation(t, root, &r);
        }
    }
    out
}

/// Canonicalizes `m` and z-scores its rotation features with statistics
/// fitted on `m` itself.
pub fn normalize(m: &MotionSequence) -> Result<NormalizedMotion> {
    if m.frames() < 2 {
        return Err(Error::InsufficientData(format!(
            "normalization needs at least 2 frames, got {}",
            m.frames()
        )));
    }
    let canonical = canonicalize(m);
    let norm = FeatureNorm::fit(canonical.frame_dim(), [canonical.rotations.as_slice()])?;
    let features = norm.apply(&canonical.rotations);
    Ok(NormalizedMotion {
        canonical,
        features,
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::rotation::euler_to_matrix;
    use crate::motion::test_support::chain;

    fn wiggle(frames: usize) -> MotionSequence {
        let sk = chain(3);
        let mut m = MotionSequence::identity(60.0, frames, sk).unwrap();
        for t in 0..frames {
            for j in 0..3 {
                let a = (t as f64 * 0.3 + j as f64).sin() * 40.0;
                m.set_rotation(t, j, &euler_to_matrix(&[2, 0, 1], &[a, a * 0.5, 0.0]));
            }
        }
        m
    }

    #[test]
    fn already_canonical_only_zscores() {
        let m = wiggle(10);
        // Root faces +Z at frame 0 when its rotation there has no yaw; force it.
        let mut m = m;
        for t in 0..10 {
            m.set_rotation(t, 0, &rotation::IDENTITY);
        }
        let n = normalize(&m).unwrap();
        assert_eq!(n.canonical.rotations, m.rotations);
        assert!(n.canonical.root_positions.iter().all(|&v| v == 0.0));
        let back = n.norm.invert(&n.features);
        for (i, (a, b)) in back.iter().zip(&m.rotations).enumerate() {
            if !n.norm.clamped[i % n.norm.dim()] {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn translation_invariant() {
        let m = wiggle(12);
        let mut shifted = m.clone();
        for t in 0..12 {
            shifted.root_positions[3 * t] += 5.0;
        }
        let a = normalize(&m).unwrap();
        let b = normalize(&shifted).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.canonical, b.canonical);
    }

    #[test]
    fn constant_channel_is_clamped_to_zero() {
        let m = MotionSequence::identity(60.0, 5, chain(2)).unwrap();
        let n = normalize(&m).unwrap();
        assert!(n.norm.clamped.iter().all(|&c| c));
        assert!(n.features.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn yawed_root_is_turned_to_face_z() {
        let mut m = wiggle(4);
        for t in 0..4 {
            m.set_rotation(t, 0, &euler_to_matrix(&[1], &[70.0]));
        }
        let c = canonicalize(&m);
        let f = rotation::apply(&c.rotation(0, 0), &[0.0, 0.0, 1.0]);
        assert!(f[0].abs() < 1e-12 && (f[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_frame_rejected() {
        let m = MotionSequence::identity(60.0, 1, chain(2)).unwrap();
        assert!(normalize(&m).is_err());
    }
}
