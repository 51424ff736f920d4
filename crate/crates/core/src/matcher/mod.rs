//! Database search: pose, audio and text pre-candidates fused by rank, with
//! the final pick between the audio and text candidates made by phase
//! continuity.

mod build;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{CodeSequence, Codebook};
use crate::error::{Error, Result};
use crate::motion::{forward_kinematics, MotionSequence, Skeleton};
use crate::phase::{continuity_distance, PcaBasis};
use crate::seqsim::{cosine_unchecked, levenshtein, window_at, EmbeddingSequence, StepWindow, TokenSequence};

pub use build::{build_database, fit_models, prepare_motion, split_clips, FitSummary, Models, SessionInput};

/// Inter-word pause, in seconds, that starts a new clip.
pub const CLIP_GAP_SECONDS: f64 = 0.5;

/// Default weight of the code-frequency rank.
pub const DEFAULT_FREQ_WEIGHT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordTiming {
    pub word: String,
    pub start: f64,
    pub end: f64,
}

/// Shape and windowing parameters shared by every clip in a database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbParams {
    pub fps: f64,
    /// Frames per code.
    pub d: usize,
    /// Length of the speech window around each step, seconds.
    pub window_seconds: f64,
    pub n_phase: usize,
    pub n_stride: usize,
    /// Frames in the sliding window used to extract phase.
    pub phase_window: usize,
    /// Phase channels `M`.
    pub channels: usize,
    pub text_dim: usize,
    pub token_rate: f64,
    pub vocab: u32,
    pub joints: Vec<String>,
}

impl DbParams {
    pub fn phase_width(&self) -> usize {
        2 * self.channels
    }

    /// Values in one stored phase window.
    pub fn phase_len(&self) -> usize {
        self.n_phase * self.phase_width()
    }

    pub fn geometry(&self) -> StepWindow {
        StepWindow {
            half_width: self.window_seconds / 2.0,
            d: self.d,
            fps: self.fps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.fps > 0.0
            && self.d > 0
            && self.window_seconds > 0.0
            && self.channels > 0
            && self.text_dim > 0
            && self.token_rate > 0.0;
        if !positive {
            return Err(Error::InvalidArgument("database parameters must be positive".into()));
        }
        if self.n_stride == 0 || self.n_stride >= self.n_phase {
            return Err(Error::InvalidArgument(format!(
                "need 0 < n_stride < n_phase, got {} and {}",
                self.n_stride, self.n_phase
            )));
        }
        Ok(())
    }
}

/// One searchable clip: codes plus the per-step speech and phase features.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord {
    pub clip_id: String,
    pub codes: CodeSequence,
    /// Audio tokens around each step.
    pub audio_windows: Vec<Vec<u32>>,
    /// `steps × text_dim`.
    pub text_windows: Vec<f64>,
    /// `steps × n_phase × 2M`.
    pub phase_windows: Vec<f64>,
    pub word_timings: Vec<WordTiming>,
}

impl ClipRecord {
    pub fn steps(&self) -> usize {
        self.codes.len()
    }
}

/// Position of one code occurrence in the database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occurrence {
    pub clip: usize,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureDatabase {
    pub params: DbParams,
    pub codebook: Codebook,
    pub pca: PcaBasis,
    pub clips: Vec<ClipRecord>,
    /// Occurrences of each code across all clips.
    pub code_frequency: Vec<usize>,
}

impl GestureDatabase {
    /// Checks every clip against `params` and the codebook and tallies code
    /// frequencies.
    pub fn new(
        params: DbParams,
        codebook: Codebook,
        pca: PcaBasis,
        clips: Vec<ClipRecord>,
    ) -> Result<Self> {
        params.validate()?;
        if codebook.d != params.d {
            return Err(Error::DimensionMismatch {
                expected: params.d,
                actual: codebook.d,
                context: "frames per code",
            });
        }
        if pca.channels != params.channels {
            return Err(Error::DimensionMismatch {
                expected: params.channels,
                actual: pca.channels,
                context: "phase channels",
            });
        }
        let mut code_frequency = vec![0; codebook.code_count];
        for clip in &clips {
            let n = clip.steps();
            if clip.audio_windows.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: clip.audio_windows.len(),
                    context: "audio windows per clip",
                });
            }
            if clip.text_windows.len() != n * params.text_dim {
                return Err(Error::DimensionMismatch {
                    expected: n * params.text_dim,
                    actual: clip.text_windows.len(),
                    context: "text windows per clip",
                });
            }
            if clip.phase_windows.len() != n * params.phase_len() {
                return Err(Error::DimensionMismatch {
                    expected: n * params.phase_len(),
                    actual: clip.phase_windows.len(),
                    context: "phase windows per clip",
                });
            }
            if clip
                .audio_windows
                .iter()
                .flatten()
                .any(|&t| t >= params.vocab)
            {
                return Err(Error::InvalidArgument(format!(
                    "clip {} has a token outside the vocabulary",
                    clip.clip_id
                )));
            }
            for w in clip.word_timings.windows(2) {
                if w[1].start < w[0].start {
                    return Err(Error::InvalidArgument(format!(
                        "word timings of clip {} are not monotone",
                        clip.clip_id
                    )));
                }
            }
            for &c in &clip.codes.codes {
                if c >= codebook.code_count {
                    return Err(Error::CodeOutOfRange {
                        code: c,
                        count: codebook.code_count,
                    });
                }
                code_frequency[c] += 1;
            }
        }
        Ok(GestureDatabase {
            params,
            codebook,
            pca,
            clips,
            code_frequency,
        })
    }

    pub fn code_count(&self) -> usize {
        self.codebook.code_count
    }

    pub fn steps(&self) -> usize {
        self.clips.iter().map(ClipRecord::steps).sum()
    }

    pub fn code_at(&self, o: Occurrence) -> usize {
        self.clips[o.clip].codes.codes[o.step]
    }

    pub fn text(&self, o: Occurrence) -> &[f64] {
        let e = self.params.text_dim;
        &self.clips[o.clip].text_windows[o.step * e..(o.step + 1) * e]
    }

    pub fn phase(&self, o: Occurrence) -> &[f64] {
        let n = self.params.phase_len();
        &self.clips[o.clip].phase_windows[o.step * n..(o.step + 1) * n]
    }

    /// First occurrence of `code`, scanning clips then steps.
    pub fn first_occurrence(&self, code: usize) -> Option<Occurrence> {
        self.clips.iter().enumerate().find_map(|(clip, c)| {
            c.codes
                .codes
                .iter()
                .position(|&x| x == code)
                .map(|step| Occurrence { clip, step })
        })
    }
}

/// Decoded codebook windows in raw rotation-feature units.
#[derive(Debug, Clone)]
pub struct PoseTable {
    raw: Vec<f64>,
    dim: usize,
}

impl PoseTable {
    pub fn new(cb: &Codebook) -> Result<Self> {
        let mut raw = Vec::with_capacity(cb.centers.len());
        for c in 0..cb.code_count {
            raw.extend(cb.decode_window_raw(c)?);
        }
        Ok(PoseTable {
            raw,
            dim: cb.code_dim(),
        })
    }

    pub fn code_count(&self) -> usize {
        self.raw.len() / self.dim
    }

    /// Euclidean distance from the decoded window of `prev` to every code.
    pub fn distances(&self, prev: usize) -> Result<Vec<f64>> {
        let n = self.code_count();
        if prev >= n {
            return Err(Error::CodeOutOfRange { code: prev, count: n });
        }
        let p = &self.raw[prev * self.dim..(prev + 1) * self.dim];
        Ok(self
            .raw
            .chunks_exact(self.dim)
            .map(|w| w.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect())
    }
}

/// Pose distance of every code to `prev`; see [`PoseTable::distances`].
pub fn pose_precandidate(prev: usize, cb: &Codebook) -> Result<Vec<f64>> {
    PoseTable::new(cb)?.distances(prev)
}

/// Per-code minimum distance over the database and the occurrence that
/// attains it. Codes without an eligible occurrence stay at `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreCandidates {
    pub dist: Vec<f64>,
    pub best: Vec<Option<Occurrence>>,
}

impl PreCandidates {
    fn new(codes: usize) -> Self {
        PreCandidates {
            dist: vec![f64::INFINITY; codes],
            best: vec![None; codes],
        }
    }

    // Strict comparison keeps the first occurrence in scan order on ties.
    fn offer(&mut self, code: usize, d: f64, o: Occurrence) {
        if d < self.dist[code] {
            self.dist[code] = d;
            self.best[code] = Some(o);
        }
    }
}

/// `allowed(occurrence, code)` decides whether an occurrence may be used.
pub fn audio_precandidate(
    window: &[u32],
    db: &GestureDatabase,
    allowed: impl Fn(Occurrence, usize) -> bool,
) -> PreCandidates {
    let mut out = PreCandidates::new(db.code_count());
    for (ci, clip) in db.clips.iter().enumerate() {
        for (step, (&code, stored)) in clip.codes.codes.iter().zip(&clip.audio_windows).enumerate() {
            let o = Occurrence { clip: ci, step };
            if allowed(o, code) {
                out.offer(code, levenshtein(window, stored) as f64, o);
            }
        }
    }
    out
}

/// Text distance `1 − cos` per code; zero vectors count as cosine 0.
pub fn text_precandidate(
    query: &[f64],
    db: &GestureDatabase,
    allowed: impl Fn(Occurrence, usize) -> bool,
) -> Result<PreCandidates> {
    let e = db.params.text_dim;
    if query.len() != e {
        return Err(Error::DimensionMismatch {
            expected: e,
            actual: query.len(),
            context: "query text embedding",
        });
    }
    let mut out = PreCandidates::new(db.code_count());
    for (ci, clip) in db.clips.iter().enumerate() {
        for (step, &code) in clip.codes.codes.iter().enumerate() {
            let o = Occurrence { clip: ci, step };
            if allowed(o, code) {
                let cos = cosine_unchecked(query, &clip.text_windows[step * e..(step + 1) * e]);
                out.offer(code, 1.0 - cos.value, o);
            }
        }
    }
    Ok(out)
}

/// Ascending rank positions: each value's position is the number of finite
/// values strictly below it; `+∞` ranks after every finite value.
pub fn rank_positions(values: &[f64]) -> Vec<usize> {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    values
        .iter()
        .map(|&v| {
            if v.is_finite() {
                finite.partition_point(|&x| x < v)
            } else {
                finite.len()
            }
        })
        .collect()
}

/// Rank positions scaled into `[0, 1]` by `len − 1`.
pub fn relrank(values: &[f64]) -> Vec<f64> {
    if values.len() <= 1 {
        return vec![0.0; values.len()];
    }
    let scale = (values.len() - 1) as f64;
    rank_positions(values)
        .into_iter()
        .map(|p| p as f64 / scale)
        .collect()
}

/// Fused scores `R_c + R_x + w·R_f` for every code and the code at rank `k`
/// (1-based) among the `selectable` ones. Ties go to the lower code.
pub fn select_candidates(
    pose: &[usize],
    speech: &[usize],
    frequency: &[usize],
    weight: f64,
    selectable: &[bool],
    k: usize,
) -> Result<(usize, Vec<f64>)> {
    let n = pose.len();
    if speech.len() != n || frequency.len() != n || selectable.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: speech.len(),
            context: "rank arrays",
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    // Integer rank sums keep exact ties; the weighted frequency term is added
    // in the same order for every code.
    let raw: Vec<f64> = (0..n)
        .map(|c| (pose[c] + speech[c]) as f64 + weight * frequency[c] as f64)
        .collect();
    let mut order: Vec<usize> = (0..n).filter(|&c| selectable[c]).collect();
    if k > order.len() {
        return Err(Error::InsufficientData(format!(
            "rank {k} requested but only {} codes are selectable",
            order.len()
        )));
    }
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let scale = n.saturating_sub(1).max(1) as f64;
    Ok((order[k - 1], raw.iter().map(|v| v / scale).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Audio,
    Text,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Audio => "audio",
            Source::Text => "text",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Random,
    Frequent,
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Init::Random),
            "frequent" => Ok(Init::Frequent),
            _ => Err(Error::InvalidArgument(format!(
                "unknown initialization {s:?}, expected random or frequent"
            ))),
        }
    }
}

/// Starting code and phase window for a search. `Frequent` takes the most
/// common code (lowest index on ties); `Random` draws uniformly among codes
/// present in the database. The phase comes from the code's first occurrence.
pub fn initial_state(db: &GestureDatabase, init: Init, seed: u64) -> Result<(usize, Vec<f64>)> {
    let present: Vec<usize> = (0..db.code_count()).filter(|&c| db.code_frequency[c] > 0).collect();
    if present.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let code = match init {
        Init::Frequent => {
            let max = present.iter().map(|&c| db.code_frequency[c]).max().unwrap_or(0);
            present.iter().copied().find(|&c| db.code_frequency[c] == max).unwrap_or(present[0])
        }
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            present[rng.gen_range(0..present.len())]
        }
    };
    let o = db.first_occurrence(code).ok_or(Error::EmptyDatabase)?;
    Ok((code, db.phase(o).to_vec()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchQuery {
    pub audio: TokenSequence,
    /// Per-step sentence embeddings, sampled at `text.rate`.
    pub text: EmbeddingSequence,
    pub steps: usize,
    pub g_init: usize,
    /// `n_phase × 2M` phase window preceding the first step.
    pub phase_init: Vec<f64>,
    /// Steps at which `code_mask` applies. Without it the code mask applies
    /// at every step.
    pub masks: Option<Vec<bool>>,
    /// Codes allowed where the constraint applies.
    pub code_mask: Option<Vec<bool>>,
    /// Database occurrences excluded from search, per clip and step.
    pub excluded: Option<Vec<Vec<bool>>>,
    /// Rank of the candidate to take, 1-based.
    pub k: usize,
    pub freq_weight: f64,
}

impl MatchQuery {
    pub fn new(
        audio: TokenSequence,
        text: EmbeddingSequence,
        steps: usize,
        g_init: usize,
        phase_init: Vec<f64>,
    ) -> Self {
        MatchQuery {
            audio,
            text,
            steps,
            g_init,
            phase_init,
            masks: None,
            code_mask: None,
            excluded: None,
            k: 1,
            freq_weight: DEFAULT_FREQ_WEIGHT,
        }
    }

    fn validate(&self, db: &GestureDatabase) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("query has no steps".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if !(self.freq_weight >= 0.0) || !self.freq_weight.is_finite() {
            return Err(Error::InvalidArgument("frequency weight must be non-negative".into()));
        }
        if self.g_init >= db.code_count() {
            return Err(Error::CodeOutOfRange {
                code: self.g_init,
                count: db.code_count(),
            });
        }
        if self.phase_init.len() != db.params.phase_len() {
            return Err(Error::DimensionMismatch {
                expected: db.params.phase_len(),
                actual: self.phase_init.len(),
                context: "initial phase window",
            });
        }
        if self.text.dim != db.params.text_dim {
            return Err(Error::DimensionMismatch {
                expected: db.params.text_dim,
                actual: self.text.dim,
                context: "query text embedding",
            });
        }
        if self.text.is_empty() {
            return Err(Error::InsufficientData("query has no text embeddings".into()));
        }
        if let Some(m) = &self.masks {
            if m.len() != self.steps {
                return Err(Error::DimensionMismatch {
                    expected: self.steps,
                    actual: m.len(),
                    context: "mask length vs query steps",
                });
            }
            if self.code_mask.is_none() {
                return Err(Error::InvalidArgument(
                    "a step mask needs a code constraint to apply".into(),
                ));
            }
        }
        if let Some(cm) = &self.code_mask {
            if cm.len() != db.code_count() {
                return Err(Error::DimensionMismatch {
                    expected: db.code_count(),
                    actual: cm.len(),
                    context: "code mask",
                });
            }
        }
        if let Some(ex) = &self.excluded {
            let ok = ex.len() == db.clips.len()
                && ex.iter().zip(&db.clips).all(|(e, c)| e.len() == c.steps());
            if !ok {
                return Err(Error::InvalidArgument(
                    "exclusion mask does not match the database layout".into(),
                ));
            }
        }
        Ok(())
    }

    fn allowed(&self, step: usize, o: Occurrence, code: usize) -> bool {
        if let Some(ex) = &self.excluded {
            if ex[o.clip][o.step] {
                return false;
            }
        }
        let constrained = self.masks.as_ref().map_or(true, |m| m[step]);
        match &self.code_mask {
            Some(cm) if constrained => cm[code],
            _ => true,
        }
    }
}

/// Number of whole code steps covered by an audio stream.
pub fn query_steps(audio: &TokenSequence, fps: f64, d: usize) -> usize {
    (audio.duration() * fps / d as f64 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub code: usize,
    pub occurrence: Occurrence,
    /// Fused rank score of the code.
    pub fused: f64,
    /// `1 − cos` phase continuity against the running tail.
    pub continuity: f64,
}

/// Everything computed at one search step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub step: usize,
    pub prev_code: usize,
    pub c_dist: Vec<f64>,
    pub a_dist: Vec<f64>,
    pub t_dist: Vec<f64>,
    pub r_c: Vec<f64>,
    pub r_a: Vec<f64>,
    pub r_t: Vec<f64>,
    pub fused_audio: Vec<f64>,
    pub fused_text: Vec<f64>,
    pub audio: Candidate,
    pub text: Candidate,
    pub source: Source,
}

impl StepTrace {
    pub fn chosen(&self) -> &Candidate {
        match self.source {
            Source::Audio => &self.audio,
            Source::Text => &self.text,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub codes: Vec<usize>,
    pub sources: Vec<Source>,
    pub traces: Vec<StepTrace>,
    pub decoded: MotionSequence,
    /// `(from, to)` edits applied after search, in order.
    pub replacements: Vec<(usize, usize)>,
}

fn decode_codes(cb: &Codebook, codes: &[usize], fps: f64) -> Result<MotionSequence> {
    cb.decode(&CodeSequence {
        codes: codes.to_vec(),
        d: cb.d,
        source_fps: fps,
    })
}

/// Runs the step-by-step search for `query` over `db`.
pub fn search(db: &GestureDatabase, query: &MatchQuery) -> Result<MatchResult> {
    if db.steps() == 0 {
        return Err(Error::EmptyDatabase);
    }
    query.validate(db)?;
    let p = &db.params;
    let geometry = p.geometry();
    let poses = PoseTable::new(&db.codebook)?;
    let freq_values: Vec<f64> = db.code_frequency.iter().map(|&c| -(c as f64)).collect();
    let freq_pos = rank_positions(&freq_values);
    let width = p.phase_width();

    let mut prev_code = query.g_init;
    let mut prev_phase = query.phase_init.clone();
    let mut codes = Vec::with_capacity(query.steps);
    let mut sources = Vec::with_capacity(query.steps);
    let mut traces = Vec::with_capacity(query.steps);

    for step in 0..query.steps {
        let (audio_window, _) = window_at(&query.audio, step, &geometry)?;
        let text = query.text.row_at_time(geometry.center(step));
        let allowed = |o: Occurrence, code: usize| query.allowed(step, o, code);

        let c_dist = poses.distances(prev_code)?;
        let audio = audio_precandidate(audio_window, db, allowed);
        let textc = text_precandidate(text, db, allowed)?;
        if audio.best.iter().all(Option::is_none) {
            return Err(Error::AllMasked { step });
        }

        let pc = rank_positions(&c_dist);
        let pa = rank_positions(&audio.dist);
        let pt = rank_positions(&textc.dist);
        let sel_a: Vec<bool> = audio.dist.iter().map(|d| d.is_finite()).collect();
        let sel_t: Vec<bool> = textc.dist.iter().map(|d| d.is_finite()).collect();
        let (code_a, fused_audio) =
            select_candidates(&pc, &pa, &freq_pos, query.freq_weight, &sel_a, query.k)?;
        let (code_t, fused_text) =
            select_candidates(&pc, &pt, &freq_pos, query.freq_weight, &sel_t, query.k)?;
        let occ_a = audio.best[code_a].expect("selectable code has an occurrence");
        let occ_t = textc.best[code_t].expect("selectable code has an occurrence");

        let cont_a = continuity_distance(&prev_phase, db.phase(occ_a), width, p.n_phase, p.n_stride)?;
        let cont_t = continuity_distance(&prev_phase, db.phase(occ_t), width, p.n_phase, p.n_stride)?;
        // Ties keep the audio candidate.
        let source = if cont_a.score <= cont_t.score {
            Source::Audio
        } else {
            Source::Text
        };
        let (code, occ) = match source {
            Source::Audio => (code_a, occ_a),
            Source::Text => (code_t, occ_t),
        };

        let scale = |v: &[usize]| -> Vec<f64> {
            let s = v.len().saturating_sub(1).max(1) as f64;
            v.iter().map(|&x| x as f64 / s).collect()
        };
        traces.push(StepTrace {
            step,
            prev_code,
            audio: Candidate {
                code: code_a,
                occurrence: occ_a,
                fused: fused_audio[code_a],
                continuity: cont_a.score,
            },
            text: Candidate {
                code: code_t,
                occurrence: occ_t,
                fused: fused_text[code_t],
                continuity: cont_t.score,
            },
            r_c: scale(&pc),
            r_a: scale(&pa),
            r_t: scale(&pt),
            c_dist,
            a_dist: audio.dist,
            t_dist: textc.dist,
            fused_audio,
            fused_text,
            source,
        });
        codes.push(code);
        sources.push(source);
        prev_code = code;
        prev_phase = db.phase(occ).to_vec();
    }

    let decoded = decode_codes(&db.codebook, &codes, p.fps)?;
    Ok(MatchResult {
        codes,
        sources,
        traces,
        decoded,
        replacements: Vec::new(),
    })
}

/// Replaces every `from` code with `to` and re-decodes. The search traces
/// are kept as recorded; the edit is listed in `replacements`.
pub fn replace_code(result: &MatchResult, from: usize, to: usize, cb: &Codebook) -> Result<MatchResult> {
    for c in [from, to] {
        if c >= cb.code_count {
            return Err(Error::CodeOutOfRange {
                code: c,
                count: cb.code_count,
            });
        }
    }
    let mut out = result.clone();
    if from == to || !result.codes.contains(&from) {
        return Ok(out);
    }
    for c in &mut out.codes {
        if *c == from {
            *c = to;
        }
    }
    out.decoded = decode_codes(cb, &out.codes, result.decoded.fps)?;
    out.replacements.push((from, to));
    Ok(out)
}

/// Evaluates `predicate` on the decoded motion of every code and returns the
/// per-code mask (`true` = allowed).
pub fn constrain_codes(
    cb: &Codebook,
    predicate: impl Fn(usize, &MotionSequence) -> Result<bool>,
) -> Result<Vec<bool>> {
    let mut mask = Vec::with_capacity(cb.code_count);
    for c in 0..cb.code_count {
        let m = decode_codes(cb, &[c], 60.0)?;
        mask.push(predicate(c, &m)?);
    }
    if !mask.iter().any(|&b| b) {
        return Err(Error::EmptyConstraint);
    }
    Ok(mask)
}

/// Mean height (Y) of `joint` over the frames of `m`, from forward
/// kinematics with the root at the origin.
pub fn mean_joint_height(skeleton: &Skeleton, m: &MotionSequence, joint: &str) -> Result<f64> {
    let j = skeleton
        .find(joint)
        .ok_or_else(|| Error::InvalidArgument(format!("joint {joint:?} not in skeleton")))?;
    let p = forward_kinematics(skeleton, m)?;
    let total: f64 = (0..p.frames()).map(|t| p.position(t, j)[1]).sum();
    Ok(total / p.frames() as f64)
}

/// Mask of codes whose decoded `joint` stays above `threshold` on average.
pub fn wrist_above(cb: &Codebook, joint: &str, threshold: f64) -> Result<Vec<bool>> {
    let sk = cb.skeleton.clone();
    constrain_codes(cb, |_, m| Ok(mean_joint_height(&sk, m, joint)? > threshold))
}
