use super::rotation::{self, Mat3};
use super::{MotionSequence, PositionSequence, Skeleton};
use crate::error::{Error, Result};

/// Global rotations and positions of every joint at frame `t`.
pub(crate) fn global_pose(m: &MotionSequence, t: usize) -> (Vec<Mat3>, Vec<[f64; 3]>) {
    let sk = &*m.skeleton;
    let n = sk.joint_count();
    let mut rots: Vec<Mat3> = Vec::with_capacity(n);
    let mut pos: Vec<[f64; 3]> = Vec::with_capacity(n);
    for j in 0..n {
        let local = m.rotation(t, j);
        match sk.parents[j] {
            None => {
                rots.push(local);
                pos.push(m.root_position(t));
            }
            Some(p) => {
                let off = rotation::apply(&rots[p], &sk.offsets[j]);
                let base = pos[p];
                pos.push([base[0] + off[0], base[1] + off[1], base[2] + off[2]]);
                rots.push(rotation::mul(&rots[p], &local));
            }
        }
    }
    (rots, pos)
}

/// World-space joint positions for every frame.
pub fn forward_kinematics(s: &Skeleton, m: &MotionSequence) -> Result<PositionSequence> {
    if *m.skeleton != *s {
        return Err(Error::InvalidArgument(
            "motion was not recorded on this skeleton".into(),
        ));
    }
    let frames = m.frames();
    let joints = s.joint_count();
    let mut positions = Vec::with_capacity(frames * joints * 3);
    for t in 0..frames {
        let (_, pos) = global_pose(m, t);
        for p in pos {
            positions.extend_from_slice(&p);
        }
    }
    Ok(PositionSequence {
        fps: m.fps,
        joints,
        positions,
    })
}

/// `order`-th time derivative by repeated differencing, scaled by `fps^order`.
///
/// Each pass takes the difference of neighbouring frames, which is the
/// central difference about the half-frame between them, so the result has
/// `T − order` frames and is exact for polynomials of degree `order`.
pub fn finite_difference(p: &PositionSequence, order: usize) -> Result<PositionSequence> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    let frames = p.frames();
    if frames <= order {
        return Err(Error::InsufficientData(format!(
            "order-{order} derivative needs more than {order} frames, got {frames}"
        )));
    }
    let w = p.joints * 3;
    let mut cur = p.positions.clone();
    for pass in 0..order {
        let n = frames - pass;
        let mut next = Vec::with_capacity((n - 1) * w);
        for t in 0..n - 1 {
            for k in 0..w {
                next.push((cur[(t + 1) * w + k] - cur[t * w + k]) * p.fps);
            }
        }
        cur = next;
    }
    Ok(PositionSequence {
        fps: p.fps,
        joints: p.joints,
        positions: cur,
    })
}

/// Per-frame joint speeds `‖x(t+1) − x(t)‖·fps`, shape `(T − 1) × J`.
pub fn joint_speeds(p: &PositionSequence) -> Result<Vec<f64>> {
    let v = finite_difference(p, 1)?;
    Ok(v.positions
        .chunks_exact(3)
        .map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt())
        .collect())
}
