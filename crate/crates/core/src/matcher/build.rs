use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{ClipRecord, DbParams, GestureDatabase, WordTiming, CLIP_GAP_SECONDS};
use crate::codebook::{segment_windows, CodeSequence, Codebook, Windows};
use crate::error::{Error, Result};
use crate::motion::{canonicalize, FeatureNorm, MotionSequence};
use crate::phase::{build_latent_curves, phase_manifold, rotational_velocity, PcaBasis};
use crate::seqsim::{window_at, EmbeddingSequence, TokenSequence};

/// A clip's frame span and the words it covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipSpan {
    pub frames: Range<usize>,
    pub words: Range<usize>,
}

/// Splits a recording at every inter-word pause longer than `gap` seconds.
/// Each clip spans its words' frames widened to whole code steps; without
/// words the whole recording is one clip.
pub fn split_clips(
    frames: usize,
    fps: f64,
    d: usize,
    timings: &[WordTiming],
    gap: f64,
) -> Result<Vec<ClipSpan>> {
    if d == 0 || !(fps > 0.0) {
        return Err(Error::InvalidArgument("fps and d must be positive".into()));
    }
    let usable = frames / d * d;
    if usable == 0 {
        return Err(Error::InsufficientData(format!(
            "{frames} frames cannot fill a {d}-frame code step"
        )));
    }
    for (i, w) in timings.iter().enumerate() {
        if !(w.end >= w.start) || !w.start.is_finite() || !w.end.is_finite() {
            return Err(Error::InvalidArgument(format!("word {i} ends before it starts")));
        }
        if i > 0 && w.start < timings[i - 1].start {
            return Err(Error::InvalidArgument(format!("word timings not monotone at word {i}")));
        }
    }
    if timings.is_empty() {
        return Ok(vec![ClipSpan {
            frames: 0..usable,
            words: 0..0,
        }]);
    }
    let mut groups = Vec::new();
    let mut first = 0;
    for i in 1..timings.len() {
        if timings[i].start - timings[i - 1].end > gap {
            groups.push(first..i);
            first = i;
        }
    }
    groups.push(first..timings.len());

    let step_secs = d as f64 / fps;
    let mut spans: Vec<ClipSpan> = Vec::with_capacity(groups.len());
    for words in groups {
        let t0 = timings[words.start].start;
        let t1 = timings[words.start..words.end]
            .iter()
            .map(|w| w.end)
            .fold(f64::NEG_INFINITY, f64::max);
        let s0 = ((t0 / step_secs + 1e-9).floor().max(0.0) as usize) * d;
        let s1 = ((t1 / step_secs - 1e-9).ceil().max(0.0) as usize * d).min(usable);
        let s0 = spans.last().map_or(s0, |p| s0.max(p.frames.end));
        if s1 > s0 {
            spans.push(ClipSpan {
                frames: s0..s1,
                words,
            });
        }
    }
    Ok(spans)
}

/// Root-centred, facing-aligned motion restricted to `joints`.
pub fn prepare_motion(m: &MotionSequence, joints: &[String]) -> Result<MotionSequence> {
    canonicalize(m).select_joints(joints)
}

/// Codebook, phase projection and the joint list they were fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub codebook: Codebook,
    pub pca: PcaBasis,
    pub joints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub sequences: usize,
    pub windows: usize,
    pub iterations: usize,
    pub converged: bool,
    pub reseeded: usize,
    /// Final `Σ‖w − nearest centre‖²` and its per-window mean.
    pub quantization_error: f64,
    pub mean_error: f64,
    pub clamped_features: usize,
}

/// Fits the codebook and phase projection on prepared motions. Centres are
/// rounded to single precision so the stored codebook is exact.
pub fn fit_models(
    motions: &[MotionSequence],
    joints: &[String],
    d: usize,
    code_count: usize,
    channels: usize,
    seed: u64,
) -> Result<(Models, FitSummary)> {
    let first = motions
        .first()
        .ok_or_else(|| Error::InsufficientData("no motion to fit".into()))?;
    let skeleton = first.skeleton.clone();
    for m in motions {
        if *m.skeleton != *skeleton {
            return Err(Error::InvalidArgument("motions use different skeletons".into()));
        }
    }
    let frame_dim = first.frame_dim();
    let norm = FeatureNorm::fit(frame_dim, motions.iter().map(|m| m.rotations.as_slice()))?;
    let mut windows = Windows {
        data: Vec::new(),
        dim: d * frame_dim,
    };
    for m in motions.iter().filter(|m| m.frames() >= d) {
        windows.extend(&segment_windows(&norm.apply(&m.rotations), frame_dim, d)?)?;
    }
    let (fitted, report) = Codebook::fit(&windows, code_count, seed, d, norm.clone(), skeleton.clone())?;
    let centers: Vec<f64> = fitted.centers.iter().map(|&v| v as f32 as f64).collect();
    let codebook = Codebook::new(centers, d, norm, skeleton)?;

    let velocities = motions
        .iter()
        .filter(|m| m.frames() >= 2)
        .map(rotational_velocity)
        .collect::<Result<Vec<_>>>()?;
    let pca = PcaBasis::fit(frame_dim, channels, velocities.iter().map(Vec::as_slice))?;

    let mut error = 0.0;
    for i in 0..windows.len() {
        let w = windows.get(i);
        let c = codebook.center(codebook.quantize(w)?);
        error += w.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let summary = FitSummary {
        sequences: motions.len(),
        windows: windows.len(),
        iterations: report.iterations,
        converged: report.converged,
        reseeded: report.reseeded,
        quantization_error: error,
        mean_error: error / windows.len() as f64,
        clamped_features: codebook.norm.clamped.iter().filter(|&&c| c).count(),
    };
    Ok((
        Models {
            codebook,
            pca,
            joints: joints.to_vec(),
        },
        summary,
    ))
}

/// One recording with its aligned speech streams.
#[derive(Debug, Clone)]
pub struct SessionInput {
    pub id: String,
    /// Full-skeleton motion as captured.
    pub motion: MotionSequence,
    pub tokens: TokenSequence,
    pub text: EmbeddingSequence,
    pub timings: Vec<WordTiming>,
}

fn single(v: f64) -> f64 {
    v as f32 as f64
}

/// Encodes every session, splits it into clips and extracts the per-step
/// speech and phase windows.
pub fn build_database(
    sessions: &[SessionInput],
    models: &Models,
    params: DbParams,
) -> Result<GestureDatabase> {
    params.validate()?;
    if params.joints != models.joints {
        return Err(Error::InvalidArgument(
            "database joints differ from the fitted models".into(),
        ));
    }
    let cb = &models.codebook;
    let geometry = params.geometry();
    let mut clips = Vec::new();
    for s in sessions {
        let named = |msg: String| Error::InvalidArgument(format!("session {}: {msg}", s.id));
        if (s.motion.fps - params.fps).abs() > 1e-6 * params.fps {
            return Err(named(format!("fps {} differs from {}", s.motion.fps, params.fps)));
        }
        if (s.tokens.rate - params.token_rate).abs() > 1e-9 * params.token_rate {
            return Err(named(format!(
                "token rate {} differs from {}",
                s.tokens.rate, params.token_rate
            )));
        }
        if s.text.dim != params.text_dim {
            return Err(named(format!(
                "embedding dimension {} differs from {}",
                s.text.dim, params.text_dim
            )));
        }
        if s.text.is_empty() {
            return Err(named("no text embeddings".into()));
        }
        let prepared = prepare_motion(&s.motion, &params.joints)?;
        if *prepared.skeleton != *cb.skeleton {
            return Err(named("skeleton differs from the codebook skeleton".into()));
        }
        let codes = cb.encode(&cb.norm.apply(&prepared.rotations), params.fps)?;
        let curves = build_latent_curves(&prepared, &models.pca)?;
        let manifold = phase_manifold(&curves, params.phase_window)?;
        let spans = split_clips(
            prepared.frames(),
            params.fps,
            params.d,
            &s.timings,
            CLIP_GAP_SECONDS,
        )?;
        for (ci, span) in spans.iter().enumerate() {
            let steps = span.frames.start / params.d..span.frames.end / params.d;
            let mut audio_windows = Vec::with_capacity(steps.len());
            let mut text_windows = Vec::with_capacity(steps.len() * params.text_dim);
            let mut phase_windows = Vec::with_capacity(steps.len() * params.phase_len());
            for g in steps.clone() {
                let (w, _) = window_at(&s.tokens, g, &geometry).map_err(|e| named(e.to_string()))?;
                audio_windows.push(w.to_vec());
                text_windows.extend(s.text.row_at_time(geometry.center(g)).iter().map(|&v| single(v)));
                phase_windows.extend(
                    manifold
                        .step_window(g, params.d, params.n_phase)
                        .into_iter()
                        .map(single),
                );
            }
            clips.push(ClipRecord {
                clip_id: format!("{}:{ci}", s.id),
                codes: CodeSequence {
                    codes: codes.codes[steps].to_vec(),
                    d: params.d,
                    source_fps: params.fps,
                },
                audio_windows,
                text_windows,
                phase_windows,
                word_timings: s.timings[span.words.clone()].to_vec(),
            });
        }
    }
    GestureDatabase::new(params, cb.clone(), models.pca.clone(), clips)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(spans: &[(f64, f64)]) -> Vec<WordTiming> {
        spans
            .iter()
            .map(|&(start, end)| WordTiming {
                word: "w".into(),
                start,
                end,
            })
            .collect()
    }

    #[test]
    fn one_long_gap_makes_two_clips() {
        // Gaps 0.2, 0.9, 0.3.
        let t = words(&[(0.0, 0.5), (0.7, 1.0), (1.9, 2.2), (2.5, 3.0)]);
        let spans = split_clips(240, 60.0, 8, &t, 0.5).unwrap();
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].words, 0..2);
        assert_eq!(spans[1].words, 2..4);
        assert!(spans.iter().all(|s| s.frames.start % 8 == 0 && s.frames.end % 8 == 0));
    }

    #[test]
    fn short_gaps_keep_one_clip() {
        let t = words(&[(0.0, 0.5), (0.6, 1.0), (1.3, 2.0)]);
        assert_eq!(split_clips(240, 60.0, 8, &t, 0.5).unwrap().len(), 1);
    }

    #[test]
    fn gap_of_exactly_half_second_does_not_split() {
        let t = words(&[(0.0, 0.5), (1.0, 1.5)]);
        assert_eq!(split_clips(240, 60.0, 8, &t, 0.5).unwrap().len(), 1);
    }

    #[test]
    fn no_words_covers_whole_steps() {
        let spans = split_clips(245, 60.0, 8, &[], 0.5).unwrap();
        assert_eq!(spans, vec![ClipSpan { frames: 0..240, words: 0..0 }]);
    }

    #[test]
    fn spans_round_outward_to_steps() {
        // 0.1 s = frame 6 → step 0; 1.05 s = frame 63 → end of step 7 (frame 64).
        let spans = split_clips(240, 60.0, 8, &words(&[(0.1, 1.05)]), 0.5).unwrap();
        assert_eq!(spans[0].frames, 0..64);
    }

    #[test]
    fn non_monotone_timings_rejected() {
        assert!(split_clips(240, 60.0, 8, &words(&[(1.0, 1.2), (0.5, 0.7)]), 0.5).is_err());
        assert!(split_clips(240, 60.0, 8, &words(&[(1.0, 0.2)]), 0.5).is_err());
    }
}
