//! Random toy databases and a brute-force reference for the step search.
//!
//! The reference enumerates every (code, occurrence) pair at every step and
//! recomputes edit distances, cosines, ranks and continuity from scratch.
//! Only window extraction and decoded poses come from the library.

#![allow(dead_code)]

use std::sync::Arc;

use gesture_core::codebook::{CodeSequence, Codebook};
use gesture_core::matcher::{ClipRecord, DbParams, GestureDatabase, MatchQuery, Source};
use gesture_core::motion::rotation::euler_to_matrix;
use gesture_core::motion::{Channel, FeatureNorm, Skeleton};
use gesture_core::phase::PcaBasis;
use gesture_core::seqsim::{window_at, EmbeddingSequence, TokenSequence, AUDIO_VOCAB};
use rand::Rng;

pub const TEXT_DIM: usize = 3;
pub const N_PHASE: usize = 3;
pub const N_STRIDE: usize = 1;
pub const CHANNELS: usize = 1;

pub fn one_joint() -> Arc<Skeleton> {
    Arc::new(Skeleton {
        joint_names: vec!["j0".into()],
        parents: vec![None],
        offsets: vec![[0.0; 3]],
        channels: vec![vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation]],
        end_sites: vec![Some([0.0, 1.0, 0.0])],
    })
}

pub fn identity_norm(dim: usize) -> FeatureNorm {
    FeatureNorm {
        mean: vec![0.0; dim],
        std: vec![1.0; dim],
        clamped: vec![false; dim],
    }
}

pub fn params() -> DbParams {
    DbParams {
        fps: 2.0,
        d: 1,
        window_seconds: 1.5,
        n_phase: N_PHASE,
        n_stride: N_STRIDE,
        phase_window: 3,
        channels: CHANNELS,
        text_dim: TEXT_DIM,
        token_rate: 4.0,
        vocab: AUDIO_VOCAB,
        joints: vec!["j0".into()],
    }
}

fn pca() -> PcaBasis {
    let mut components = vec![0.0; 9];
    components[0] = 1.0;
    PcaBasis {
        norm: identity_norm(9),
        components,
        eigenvalues: vec![1.0],
        channels: CHANNELS,
    }
}

/// Small integer-valued features so that distance ties are common.
fn small_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2..=2) as f64).collect()
}

/// A database of 1–4 clips with 1–6 steps each over a codebook of 2–8
/// single-frame codes. Audio uses a three-letter alphabet.
pub fn toy_database(rng: &mut impl Rng) -> GestureDatabase {
    let p = params();
    let codes = rng.gen_range(2..=8);
    let centers: Vec<f64> = (0..codes)
        .flat_map(|_| euler_to_matrix(&[2], &[15.0 * rng.gen_range(0..6) as f64]))
        .collect();
    let cb = Codebook::new(centers, 1, identity_norm(9), one_joint()).unwrap();
    let clips = (0..rng.gen_range(1..=4))
        .map(|ci| {
            let steps = rng.gen_range(1..=6);
            let codes_v: Vec<usize> = (0..steps).map(|_| rng.gen_range(0..codes)).collect();
            ClipRecord {
                clip_id: format!("c{ci}"),
                codes: CodeSequence {
                    codes: codes_v,
                    d: 1,
                    source_fps: p.fps,
                },
                audio_windows: (0..steps)
                    .map(|_| {
                        let n = rng.gen_range(0..=4);
                        (0..n).map(|_| rng.gen_range(0..3)).collect()
                    })
                    .collect(),
                text_windows: small_vec(rng, steps * TEXT_DIM),
                phase_windows: small_vec(rng, steps * p.phase_len()),
                word_timings: Vec::new(),
            }
        })
        .collect();
    GestureDatabase::new(p, cb, pca(), clips).unwrap()
}

/// A query of 1–6 steps with random speech, start code, masks and `k`.
pub fn toy_query(rng: &mut impl Rng, db: &GestureDatabase) -> MatchQuery {
    let p = &db.params;
    let steps = rng.gen_range(1..=6);
    let tokens = (0..(steps as f64 / p.fps * p.token_rate) as usize)
        .map(|_| rng.gen_range(0..3))
        .collect();
    let audio = TokenSequence::new(tokens, p.token_rate, p.vocab).unwrap();
    let text = EmbeddingSequence::new(small_vec(rng, steps * TEXT_DIM), TEXT_DIM, p.fps).unwrap();
    let mut q = MatchQuery::new(
        audio,
        text,
        steps,
        rng.gen_range(0..db.code_count()),
        small_vec(rng, p.phase_len()),
    );
    q.freq_weight = [0.0, 0.05, 0.5, 2.0][rng.gen_range(0..4)];
    q.k = if rng.gen_bool(0.7) { 1 } else { 2 };
    if rng.gen_bool(0.3) {
        q.code_mask = Some((0..db.code_count()).map(|_| rng.gen_bool(0.7)).collect());
        if rng.gen_bool(0.5) {
            q.masks = Some((0..steps).map(|_| rng.gen_bool(0.5)).collect());
        }
    }
    if rng.gen_bool(0.2) {
        q.excluded = Some(
            db.clips
                .iter()
                .map(|c| (0..c.steps()).map(|_| rng.gen_bool(0.2)).collect())
                .collect(),
        );
    }
    q
}

fn edit_distance(a: &[u32], b: &[u32]) -> usize {
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        m[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            m[i][j] = sub.min(m[i - 1][j] + 1).min(m[i][j - 1] + 1);
        }
    }
    m[a.len()][b.len()]
}

/// Cosine with zero-norm inputs counted as 0; `None` marks that case.
fn cosine(u: &[f64], v: &[f64]) -> Option<f64> {
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if nu == 0.0 || nv == 0.0 {
        None
    } else {
        Some((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
    }
}

/// Number of finite entries strictly below `v`; infinite entries rank last.
fn position(values: &[f64], v: f64) -> usize {
    let finite = values.iter().filter(|x| x.is_finite());
    if v.is_finite() {
        finite.filter(|&&x| x < v).count()
    } else {
        finite.count()
    }
}

fn continuity(prev: &[f64], cand: &[f64], width: usize) -> f64 {
    let frames = |w: &[f64]| w.len() / width;
    let frame = |w: &[f64], f: usize| w[f * width..(f + 1) * width].to_vec();
    let (pf, overlap) = (frames(prev), N_PHASE - N_STRIDE);
    let mut u = Vec::new();
    let mut v = Vec::new();
    for f in pf - overlap..pf {
        u.extend(frame(prev, f));
    }
    for f in 0..N_STRIDE {
        u.extend(frame(cand, f));
    }
    for f in pf - N_STRIDE..pf {
        v.extend(frame(prev, f));
    }
    for f in 0..overlap {
        v.extend(frame(cand, f));
    }
    cosine(&u, &v).map_or(0.0, |c| 1.0 - c)
}

pub struct Reference {
    pub codes: Vec<usize>,
    pub sources: Vec<Source>,
}

/// Exhaustive re-computation of the search; `None` when some step has no
/// eligible occurrence.
pub fn exhaustive_search(db: &GestureDatabase, q: &MatchQuery) -> Option<Reference> {
    let p = &db.params;
    let n = db.code_count();
    let geometry = p.geometry();
    let poses: Vec<Vec<f64>> = (0..n).map(|c| db.codebook.decode_window_raw(c).unwrap()).collect();
    let freq: Vec<f64> = db.code_frequency.iter().map(|&f| -(f as f64)).collect();
    let freq_pos: Vec<usize> = freq.iter().map(|&v| position(&freq, v)).collect();

    let mut prev = q.g_init;
    let mut prev_phase = q.phase_init.clone();
    let mut out = Reference {
        codes: Vec::new(),
        sources: Vec::new(),
    };
    for step in 0..q.steps {
        let (window, _) = window_at(&q.audio, step, &geometry).unwrap();
        let text = q.text.row_at_time(geometry.center(step));
        let pose: Vec<f64> = poses
            .iter()
            .map(|w| w.iter().zip(&poses[prev]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();

        // Every eligible (code, clip, step) with both distances.
        let mut pairs = Vec::new();
        for (ci, clip) in db.clips.iter().enumerate() {
            for (s, &code) in clip.codes.codes.iter().enumerate() {
                if q.excluded.as_ref().is_some_and(|e| e[ci][s]) {
                    continue;
                }
                let constrained = q.masks.as_ref().map_or(true, |m| m[step]);
                if constrained && q.code_mask.as_ref().is_some_and(|m| !m[code]) {
                    continue;
                }
                let a = edit_distance(window, &clip.audio_windows[s]) as f64;
                let t = 1.0
                    - cosine(text, &clip.text_windows[s * TEXT_DIM..(s + 1) * TEXT_DIM]).unwrap_or(0.0);
                pairs.push((code, ci, s, a, t));
            }
        }
        if pairs.is_empty() {
            return None;
        }

        let mut picks = Vec::new();
        for modality in 0..2 {
            let dist_of = |e: &(usize, usize, usize, f64, f64)| if modality == 0 { e.3 } else { e.4 };
            // Per code: least distance, earliest (clip, step) among equals.
            let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; n];
            for e in &pairs {
                let cand = (dist_of(e), e.1, e.2);
                let better = match best[e.0] {
                    None => true,
                    Some(b) => cand.0 < b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2)),
                };
                if better {
                    best[e.0] = Some(cand);
                }
            }
            let dist: Vec<f64> = best.iter().map(|b| b.map_or(f64::INFINITY, |x| x.0)).collect();
            let mut scored: Vec<(f64, usize)> = (0..n)
                .filter(|&c| best[c].is_some())
                .map(|c| {
                    let ranks = position(&pose, pose[c]) + position(&dist, dist[c]);
                    (ranks as f64 + q.freq_weight * freq_pos[c] as f64, c)
                })
                .collect();
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let (_, code) = *scored.get(q.k - 1)?;
            let (_, ci, s) = best[code].unwrap();
            let phase = db.clips[ci].phase_windows
                [s * p.phase_len()..(s + 1) * p.phase_len()]
                .to_vec();
            let cont = continuity(&prev_phase, &phase, p.phase_width());
            picks.push((code, phase, cont));
        }
        let pick = if picks[0].2 <= picks[1].2 { 0 } else { 1 };
        let (code, phase, _) = picks.swap_remove(pick);
        out.codes.push(code);
        out.sources.push(if pick == 0 { Source::Audio } else { Source::Text });
        prev = code;
        prev_phase = phase;
    }
    Some(out)
}
