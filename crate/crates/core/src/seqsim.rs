//! Similarity primitives over speech tokens and text embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Combined audio token vocabulary: two groups of 320 entries multiplied.
pub const AUDIO_VOCAB: u32 = 320 * 320;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<u32>,
    /// Tokens per second.
    pub rate: f64,
}

impl TokenSequence {
    pub fn new(tokens: Vec<u32>, rate: f64, vocab: u32) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("token rate must be positive, got {rate}")));
        }
        if let Some(bad) = tokens.iter().find(|&&t| t >= vocab) {
            return Err(Error::InvalidArgument(format!(
                "token id {bad} outside vocabulary of {vocab}"
            )));
        }
        Ok(TokenSequence { tokens, rate })
    }

    pub fn duration(&self) -> f64 {
        self.tokens.len() as f64 / self.rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSequence {
    /// `steps × dim`, row-major.
    pub vectors: Vec<f64>,
    pub dim: usize,
    /// Rows per second.
    pub rate: f64,
}

impl EmbeddingSequence {
    pub fn new(vectors: Vec<f64>, dim: usize, rate: f64) -> Result<Self> {
        if dim == 0 || vectors.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: vectors.len(),
                context: "embedding matrix",
            });
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("embedding rate must be positive, got {rate}")));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embeddings"));
        }
        Ok(EmbeddingSequence { vectors, dim, rate })
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Row covering time `t` seconds (clamped to the sequence).
    pub fn row_at_time(&self, t: f64) -> &[f64] {
        let i = ((t * self.rate).floor().max(0.0) as usize).min(self.len().saturating_sub(1));
        self.row(i)
    }
}

/// Unit-cost edit distance, two rolling rows over the shorter input.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0usize; short.len() + 1];
    for (i, x) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Levenshtein distance divided by the longer length (0 for two empties).
pub fn normalized_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let n = a.len().max(b.len());
    if n == 0 {
        0.0
    } else {
        levenshtein(a, b) as f64 / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// Set when either input had zero norm; `value` is then 0.
    pub degenerate: bool,
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<Cosine> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
            context: "cosine similarity",
        });
    }
    Ok(cosine_unchecked(u, v))
}

pub(crate) fn cosine_unchecked(u: &[f64], v: &[f64]) -> Cosine {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Cosine {
            value: 0.0,
            degenerate: true,
        };
    }
    Cosine {
        value: (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// Index range `[start, end)` of a speech window, after clipping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowBounds {
    pub start: usize,
    pub end: usize,
    pub clipped: bool,
}

impl WindowBounds {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Geometry of the speech window around a code step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepWindow {
    pub half_width: f64,
    /// Frames per code.
    pub d: usize,
    pub fps: f64,
}

impl StepWindow {
    /// Centre of `code_step` in seconds: `(step + ½)·d / fps`.
    pub fn center(&self, code_step: usize) -> f64 {
        (code_step as f64 + 0.5) * self.d as f64 / self.fps
    }

    /// Items covering `[centre − h, centre + h]` of a stream sampled at `rate`
    /// with `len` items. Full windows always hold `round(2h·rate)` items.
    pub fn bounds(&self, code_step: usize, rate: f64, len: usize) -> Result<WindowBounds> {
        let step_start = code_step as f64 * self.d as f64 / self.fps;
        if step_start * rate >= len as f64 {
            return Err(Error::InvalidArgument(format!(
                "code step {code_step} starts beyond the {len}-item stream"
            )));
        }
        // Half-way positions round up; the epsilon absorbs float noise there.
        let start = ((self.center(code_step) - self.half_width) * rate + 0.5 + 1e-9).floor() as i64;
        let end = start + (2.0 * self.half_width * rate).round() as i64;
        let s = start.clamp(0, len as i64) as usize;
        let e = end.clamp(0, len as i64) as usize;
        Ok(WindowBounds {
            start: s,
            end: e.max(s),
            clipped: start < 0 || end > len as i64,
        })
    }
}

/// Token window around `code_step`, with its bounds.
pub fn window_at<'a>(
    seq: &'a TokenSequence,
    code_step: usize,
    geometry: &StepWindow,
) -> Result<(&'a [u32], WindowBounds)> {
    let b = geometry.bounds(code_step, seq.rate, seq.tokens.len())?;
    Ok((&seq.tokens[b.start..b.end], b))
}

/// Embedding rows around `code_step`, flattened, with their bounds.
pub fn embedding_window_at<'a>(
    seq: &'a EmbeddingSequence,
    code_step: usize,
    geometry: &StepWindow,
) -> Result<(&'a [f64], WindowBounds)> {
    let b = geometry.bounds(code_step, seq.rate, seq.len())?;
    Ok((&seq.vectors[b.start * seq.dim..b.end * seq.dim], b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::collection::vec;
    use proptest::prelude::*;

    /// Full `(|a|+1) × (|b|+1)` dynamic-programming table.
    fn full_matrix(a: &[u32], b: &[u32]) -> usize {
        let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in m.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            m[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                m[i][j] = (m[i - 1][j] + 1).min(m[i][j - 1] + 1).min(m[i - 1][j - 1] + cost);
            }
        }
        m[a.len()][b.len()]
    }

    fn tokens(s: &str) -> Vec<u32> {
        s.bytes().map(u32::from).collect()
    }

    #[test]
    fn kitten_sitting() {
        let (a, b) = (tokens("kitten"), tokens("sitting"));
        assert_eq!(full_matrix(&a, &b), 3);
        assert_eq!(levenshtein(&a, &b), 3);
    }

    #[test]
    fn empty_and_identical() {
        let b = tokens("abcd");
        assert_eq!(levenshtein(&[], &b), 4);
        assert_eq!(levenshtein(&b, &[]), 4);
        assert_eq!(levenshtein(&b, &b), 0);
        assert_eq!(normalized_levenshtein::<u32>(&[], &[]), 0.0);
    }

    #[test]
    fn cosine_cases() {
        let u = [1.0, 2.0, 3.0];
        assert!((cosine_similarity(&u, &u).unwrap().value - 1.0).abs() < 1e-15);
        let scaled = u.map(|v| 2.0 * v);
        assert!((cosine_similarity(&u, &scaled).unwrap().value - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap().value, 0.0);
        let z = cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(z.degenerate && z.value == 0.0);
        assert!(cosine_similarity(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn full_window_length() {
        let seq = TokenSequence::new((0..500).collect(), 50.0, AUDIO_VOCAB).unwrap();
        let g = StepWindow { half_width: 0.25, d: 8, fps: 60.0 };
        let (w, b) = window_at(&seq, 20, &g).unwrap();
        assert_eq!(w.len(), 25);
        assert!(!b.clipped);
    }

    #[test]
    fn first_step_is_clipped() {
        let seq = TokenSequence::new((0..500).collect(), 50.0, AUDIO_VOCAB).unwrap();
        let g = StepWindow { half_width: 0.25, d: 8, fps: 60.0 };
        let (w, b) = window_at(&seq, 0, &g).unwrap();
        assert!(b.clipped);
        assert_eq!(b.start, 0);
        assert!(w.len() < 25);
    }

    #[test]
    fn ramp_window_matches_direct_indices() {
        let seq = TokenSequence::new((0..300).collect(), 50.0, AUDIO_VOCAB).unwrap();
        let g = StepWindow { half_width: 0.25, d: 8, fps: 60.0 };
        for step in 0..37 {
            let (w, _) = window_at(&seq, step, &g).unwrap();
            // Oracle: centre index from the step midpoint, 12.5 items either side.
            let c = (step as f64 + 0.5) * 8.0 / 60.0 * 50.0;
            let lo = (c - 12.5 + 0.5 + 1e-9).floor() as i64;
            let hi = lo + 25;
            let expected: Vec<u32> = (lo.max(0)..hi.min(300)).map(|i| i as u32).collect();
            assert_eq!(w, expected.as_slice(), "step {step}");
        }
    }

    #[test]
    fn step_out_of_range() {
        let seq = TokenSequence::new(vec![1; 10], 50.0, AUDIO_VOCAB).unwrap();
        let g = StepWindow { half_width: 0.25, d: 8, fps: 60.0 };
        assert!(window_at(&seq, 2, &g).is_err());
    }

    #[test]
    fn vocabulary_bound_enforced() {
        assert!(TokenSequence::new(vec![AUDIO_VOCAB], 50.0, AUDIO_VOCAB).is_err());
    }

    proptest! {
        #[test]
        fn matches_full_matrix(a in vec(0u32..6, 0..64), b in vec(0u32..6, 0..64)) {
            prop_assert_eq!(levenshtein(&a, &b), full_matrix(&a, &b));
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        }

        #[test]
        fn triangle_and_lipschitz(
            a in vec(0u32..4, 0..24),
            b in vec(0u32..4, 0..24),
            c in vec(0u32..4, 0..24),
        ) {
            let ab = levenshtein(&a, &b) as i64;
            let bc = levenshtein(&b, &c) as i64;
            let ac = levenshtein(&a, &c) as i64;
            prop_assert!(ac <= ab + bc);
            prop_assert!((ab - ac).abs() <= bc);
        }

        #[test]
        fn cosine_scale_invariant(
            u in vec(-5.0f64..5.0, 4),
            v in vec(-5.0f64..5.0, 4),
            alpha in 0.1f64..10.0,
            beta in 0.1f64..10.0,
        ) {
            let a = cosine_similarity(&u, &v).unwrap().value;
            let su: Vec<f64> = u.iter().map(|x| x * alpha).collect();
            let sv: Vec<f64> = v.iter().map(|x| x * beta).collect();
            let b = cosine_similarity(&su, &sv).unwrap().value;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
