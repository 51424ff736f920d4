//! Synthetic speech-gesture corpus for demos and tests.
//!
//! Each session is a chain of gesture units. A unit fixes a base pose, a
//! sway frequency and amplitude for the arms and head, a pool of audio
//! tokens and a text prototype vector, so speech and motion are correlated
//! the way the matcher expects. Units cross-fade over a few frames.

use std::f64::consts::PI;
use std::sync::Arc;

use gesture_core::motion::rotation::euler_to_matrix;
use gesture_core::motion::{Channel, MotionSequence, Skeleton, UPPER_BODY_JOINTS};
use gesture_core::matcher::WordTiming;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub sessions: usize,
    pub seconds: f64,
    pub fps: f64,
    /// Frames per code step; text rows are emitted once per step.
    pub d: usize,
    pub token_rate: f64,
    pub text_dim: usize,
    /// Distinct gesture units shared by all sessions.
    pub units: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            sessions: 6,
            seconds: 20.0,
            fps: 60.0,
            d: 8,
            token_rate: 50.0,
            text_dim: 16,
            units: 12,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSession {
    pub id: String,
    pub motion: MotionSequence,
    pub tokens: Vec<u32>,
    /// `steps × text_dim`, one row per code step.
    pub text: Vec<f64>,
    pub timings: Vec<WordTiming>,
    /// Onset time of every unit, seconds.
    pub beats: Vec<f64>,
}

const ZXY: [Channel; 3] = [Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];

/// Hips plus the fifteen upper-body joints, left side along +X.
pub fn skeleton() -> Skeleton {
    let mut names = vec!["Hips".to_string()];
    names.extend(UPPER_BODY_JOINTS.iter().map(|s| s.to_string()));
    let idx = |n: &str| names.iter().position(|x| x == n).unwrap();
    let links: [(&str, &str, [f64; 3]); 15] = [
        ("Spine", "Hips", [0.0, 10.0, 0.0]),
        ("Spine1", "Spine", [0.0, 10.0, 0.0]),
        ("Spine2", "Spine1", [0.0, 10.0, 0.0]),
        ("Spine3", "Spine2", [0.0, 10.0, 0.0]),
        ("Neck", "Spine3", [0.0, 12.0, 0.0]),
        ("Neck1", "Neck", [0.0, 4.0, 0.0]),
        ("Head", "Neck1", [0.0, 6.0, 0.0]),
        ("RightShoulder", "Spine3", [-4.0, 9.0, 0.0]),
        ("RightArm", "RightShoulder", [-14.0, 0.0, 0.0]),
        ("RightForeArm", "RightArm", [-28.0, 0.0, 0.0]),
        ("RightHand", "RightForeArm", [-25.0, 0.0, 0.0]),
        ("LeftShoulder", "Spine3", [4.0, 9.0, 0.0]),
        ("LeftArm", "LeftShoulder", [14.0, 0.0, 0.0]),
        ("LeftForeArm", "LeftArm", [28.0, 0.0, 0.0]),
        ("LeftHand", "LeftForeArm", [25.0, 0.0, 0.0]),
    ];
    let mut parents = vec![None; names.len()];
    let mut offsets = vec![[0.0, 95.0, 0.0]; names.len()];
    for (child, parent, off) in links {
        parents[idx(child)] = Some(idx(parent));
        offsets[idx(child)] = off;
    }
    let mut channels = vec![ZXY.to_vec(); names.len()];
    channels[0] = vec![
        Channel::Xposition,
        Channel::Yposition,
        Channel::Zposition,
        Channel::Zrotation,
        Channel::Xrotation,
        Channel::Yrotation,
    ];
    let mut end_sites = vec![None; names.len()];
    end_sites[idx("Head")] = Some([0.0, 10.0, 0.0]);
    end_sites[idx("RightHand")] = Some([-8.0, 0.0, 0.0]);
    end_sites[idx("LeftHand")] = Some([8.0, 0.0, 0.0]);
    Skeleton {
        joint_names: names,
        parents,
        offsets,
        channels,
        end_sites,
    }
}

/// Joints that move, with the axis scale of each unit's sway.
const ACTIVE: [(&str, [f64; 3]); 9] = [
    ("Spine2", [0.2, 0.3, 0.2]),
    ("Head", [0.3, 0.5, 0.4]),
    ("RightArm", [1.0, 0.6, 0.8]),
    ("RightForeArm", [0.9, 0.3, 1.0]),
    ("RightHand", [0.5, 0.4, 0.3]),
    ("LeftArm", [1.0, 0.6, 0.8]),
    ("LeftForeArm", [0.9, 0.3, 1.0]),
    ("LeftHand", [0.5, 0.4, 0.3]),
    ("Neck", [0.2, 0.3, 0.2]),
];

struct Unit {
    base: Vec<[f64; 3]>,
    amplitude: f64,
    frequency: f64,
    phase: Vec<f64>,
    token_base: u32,
    text: Vec<f64>,
}

fn units(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Unit> {
    (0..spec.units)
        .map(|u| Unit {
            base: ACTIVE
                .iter()
                .map(|(_, s)| [0, 1, 2].map(|a| rng.gen_range(-40.0..40.0) * s[a]))
                .collect(),
            amplitude: rng.gen_range(8.0..30.0),
            frequency: rng.gen_range(0.5..2.5),
            phase: (0..ACTIVE.len()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect(),
            token_base: 1000 + 4000 * u as u32,
            text: (0..spec.text_dim).map(|_| StandardNormal.sample(rng)).collect(),
        })
        .collect()
}

fn angles(unit: &Unit, j: usize, t: f64) -> [f64; 3] {
    let s = ACTIVE[j].1;
    let w = unit.amplitude * (2.0 * PI * unit.frequency * t + unit.phase[j]).sin();
    [0, 1, 2].map(|a| unit.base[j][a] + w * s[a])
}

/// Generates `spec.sessions` sessions, bit-identical for a fixed spec.
pub fn generate(spec: &SynthSpec) -> Vec<SynthSession> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let protos = units(spec, &mut rng);
    let sk = Arc::new(skeleton());
    let active: Vec<usize> = ACTIVE
        .iter()
        .map(|(n, _)| sk.joint_names.iter().position(|x| x == n).unwrap())
        .collect();
    let frames = (spec.seconds * spec.fps).round() as usize;
    let steps = frames / spec.d;
    let fade = 6usize;

    let mut out = Vec::with_capacity(spec.sessions);
    for s in 0..spec.sessions {
        // Unit schedule in whole code steps.
        let mut schedule: Vec<usize> = Vec::with_capacity(steps + 8);
        let mut beats = Vec::new();
        while schedule.len() < steps {
            let u = rng.gen_range(0..spec.units);
            beats.push(schedule.len() as f64 * spec.d as f64 / spec.fps);
            let len = rng.gen_range(2..=5);
            schedule.extend(std::iter::repeat(u).take(len));
        }
        schedule.truncate(steps);
        let unit_at = |f: usize| schedule[(f / spec.d).min(steps - 1)];

        let yaw = rng.gen_range(-60.0..60.0);
        let sway = rng.gen_range(0.5..2.0);
        let mut rotations = Vec::with_capacity(frames * sk.joint_count() * 9);
        let mut root = Vec::with_capacity(frames * 3);
        for f in 0..frames {
            let t = f as f64 / spec.fps;
            let cur = unit_at(f);
            let start = f - f % spec.d;
            let mut blend = None;
            // Fade in from the previous unit at a unit boundary.
            if start > 0 && unit_at(start - 1) != cur {
                let into = f - start;
                if into < fade {
                    blend = Some((unit_at(start - 1), 1.0 - (into as f64 + 1.0) / (fade as f64 + 1.0)));
                }
            }
            for j in 0..sk.joint_count() {
                let m = if j == 0 {
                    euler_to_matrix(&[2, 0, 1], &[0.0, 0.0, yaw + 3.0 * (0.3 * t).sin()])
                } else if let Some(a) = active.iter().position(|&x| x == j) {
                    let mut e = angles(&protos[cur], a, t);
                    if let Some((prev, w)) = blend {
                        let p = angles(&protos[prev], a, t);
                        for k in 0..3 {
                            e[k] = (1.0 - w) * e[k] + w * p[k];
                        }
                    }
                    euler_to_matrix(&[2, 0, 1], &e)
                } else {
                    euler_to_matrix(&[2, 0, 1], &[0.0, 0.0, 0.0])
                };
                rotations.extend_from_slice(&m);
            }
            root.extend_from_slice(&[sway * (0.4 * t).sin(), 95.0, 10.0 + sway * (0.25 * t).cos()]);
        }
        let motion = MotionSequence::new(spec.fps, rotations, root, sk.clone())
            .expect("generated motion is consistent");

        let n_tokens = (spec.seconds * spec.token_rate).round() as usize;
        let tokens: Vec<u32> = (0..n_tokens)
            .map(|i| {
                let f = ((i as f64 + 0.5) / spec.token_rate * spec.fps) as usize;
                let u = unit_at(f.min(frames - 1));
                if rng.gen_bool(0.1) {
                    rng.gen_range(0..102_400)
                } else {
                    protos[u].token_base + rng.gen_range(0..6)
                }
            })
            .collect();

        let mut text = Vec::with_capacity(steps * spec.text_dim);
        for step in 0..steps {
            for &v in &protos[schedule[step]].text {
                let noise: f64 = StandardNormal.sample(&mut rng);
                text.push(v + 0.3 * noise);
            }
        }

        let mut timings = Vec::new();
        let mut t = rng.gen_range(0.05..0.3);
        let mut n = 0;
        while t < spec.seconds - 0.3 {
            let len = rng.gen_range(0.15..0.35);
            timings.push(WordTiming {
                word: format!("w{n}"),
                start: t,
                end: (t + len).min(spec.seconds),
            });
            n += 1;
            t += len + if rng.gen_bool(0.08) {
                rng.gen_range(0.6..1.2)
            } else {
                rng.gen_range(0.02..0.2)
            };
        }

        out.push(SynthSession {
            id: format!("s{s:03}"),
            motion,
            tokens,
            text,
            timings,
            beats,
        });
    }
    out
}
