//! Gesture codebook: k-means over fixed-length windows of normalized
//! rotation features, nearest-centre encoding and centroid decoding.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::rotation::nearest_rotation;
use crate::motion::{FeatureNorm, MotionSequence, Skeleton, ROT_DIM};

/// Lloyd iterations are capped at this count.
pub const MAX_LLOYD_ROUNDS: usize = 100;

/// Flattened windows, `count × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Windows {
    pub data: Vec<f64>,
    pub dim: usize,
}

impl Windows {
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn extend(&mut self, other: &Windows) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
                context: "window width",
            });
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }
}

/// Non-overlapping `d`-frame windows of a `frames × frame_dim` feature buffer.
/// Trailing frames that do not fill a window are dropped.
pub fn segment_windows(features: &[f64], frame_dim: usize, d: usize) -> Result<Windows> {
    if d == 0 || frame_dim == 0 {
        return Err(Error::InvalidArgument("window length and frame width must be positive".into()));
    }
    let frames = features.len() / frame_dim;
    if frames < d {
        return Err(Error::InsufficientData(format!(
            "{frames} frames cannot fill a {d}-frame window"
        )));
    }
    let n = frames / d;
    Ok(Windows {
        data: features[..n * d * frame_dim].to_vec(),
        dim: d * frame_dim,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest row of `centers` to `x` and its squared distance.
/// Ties go to the lowest index.
fn nearest(centers: &[f64], dim: usize, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.chunks_exact(dim).enumerate() {
        let dist = sq_dist(c, x);
        if dist < best.1 {
            best = (k, dist);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Quantization error `Σ‖w − nearest centre‖²` after each assignment step.
    pub errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Number of empty clusters re-seeded over the whole run.
    pub reseeded: usize,
}

fn kmeans_pp_init(w: &Windows, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = w.len();
    let dim = w.dim;
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..n);
    centers.extend_from_slice(w.get(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(w.get(i), w.get(first))).collect();
    let mut chosen = vec![false; n];
    chosen[first] = true;
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &v) in d2.iter().enumerate() {
                acc += v;
                if v > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            pick.unwrap_or_else(|| d2.iter().rposition(|&v| v > 0.0).unwrap_or(0))
        } else {
            // Every point coincides with a centre; take any unused one.
            let unused: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            unused[rng.gen_range(0..unused.len())]
        };
        chosen[pick] = true;
        let c = w.get(pick);
        centers.extend_from_slice(c);
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(sq_dist(w.get(i), c));
        }
    }
    centers
}

/// Lloyd's k-means with k-means++ seeding. Returns `k × dim` centres.
pub fn fit_kmeans(w: &Windows, k: usize, seed: u64) -> Result<(Vec<f64>, FitReport)> {
    if k == 0 {
        return Err(Error::InvalidArgument("codebook size must be at least 1".into()));
    }
    if w.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} windows cannot support a codebook of {k} codes",
            w.len()
        )));
    }
    if w.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("codebook training windows"));
    }
    let n = w.len();
    let dim = w.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp_init(w, k, &mut rng);
    let mut assign = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut report = FitReport {
        errors: Vec::new(),
        iterations: 0,
        converged: false,
        reseeded: 0,
    };
    for round in 0..MAX_LLOYD_ROUNDS {
        let mut changed = false;
        for i in 0..n {
            let (c, dist) = nearest(&centers, dim, w.get(i));
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
            dists[i] = dist;
        }
        report.errors.push(dists.iter().sum());
        report.iterations = round + 1;
        if !changed {
            report.converged = true;
            break;
        }
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assign[i];
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(w.get(i)) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centers[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .zip(&sums[c * dim..(c + 1) * dim])
                {
                    *dst = s * inv;
                }
            } else {
                // Empty cluster: move it onto the worst-fit point.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None::<usize>, |best, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    })
                    .unwrap_or(0);
                taken[far] = true;
                dists[far] = 0.0;
                centers[c * dim..(c + 1) * dim].copy_from_slice(w.get(far));
                report.reseeded += 1;
            }
        }
    }
    Ok((centers, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSequence {
    pub codes: Vec<usize>,
    pub d: usize,
    pub source_fps: f64,
}

impl CodeSequence {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Learned gesture units: `code_count` centres over `d·J·9` normalized features.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub centers: Vec<f64>,
    pub d: usize,
    pub code_count: usize,
    pub norm: FeatureNorm,
    /// Skeleton of the feature joints, used when decoding to motion.
    pub skeleton: Arc<Skeleton>,
}

impl Codebook {
    pub fn new(
        centers: Vec<f64>,
        d: usize,
        norm: FeatureNorm,
        skeleton: Arc<Skeleton>,
    ) -> Result<Self> {
        let frame_dim = skeleton.joint_count() * ROT_DIM;
        if norm.dim() != frame_dim {
            return Err(Error::DimensionMismatch {
                expected: frame_dim,
                actual: norm.dim(),
                context: "normalization statistics",
            });
        }
        let dim = d * frame_dim;
        if d == 0 || centers.is_empty() || centers.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: centers.len(),
                context: "codebook centres",
            });
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("codebook centres"));
        }
        Ok(Codebook {
            code_count: centers.len() / dim,
            centers,
            d,
            norm,
            skeleton,
        })
    }

    /// Fits a codebook of `code_count` codes on `windows`.
    pub fn fit(
        windows: &Windows,
        code_count: usize,
        seed: u64,
        d: usize,
        norm: FeatureNorm,
        skeleton: Arc<Skeleton>,
    ) -> Result<(Self, FitReport)> {
        let (centers, report) = fit_kmeans(windows, code_count, seed)?;
        Ok((Codebook::new(centers, d, norm, skeleton)?, report))
    }

    pub fn code_dim(&self) -> usize {
        self.centers.len() / self.code_count
    }

    pub fn frame_dim(&self) -> usize {
        self.code_dim() / self.d
    }

    pub fn center(&self, code: usize) -> &[f64] {
        let dim = self.code_dim();
        &self.centers[code * dim..(code + 1) * dim]
    }

    fn check_code(&self, code: usize) -> Result<()> {
        if code >= self.code_count {
            return Err(Error::CodeOutOfRange {
                code,
                count: self.code_count,
            });
        }
        Ok(())
    }

    /// Nearest centre for one window; ties go to the lowest code.
    pub fn quantize(&self, window: &[f64]) -> Result<usize> {
        if window.len() != self.code_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.code_dim(),
                actual: window.len(),
                context: "window to quantize",
            });
        }
        Ok(nearest(&self.centers, self.code_dim(), window).0)
    }

    pub fn encode_windows(&self, windows: &Windows, source_fps: f64) -> Result<CodeSequence> {
        let codes = (0..windows.len())
            .map(|i| self.quantize(windows.get(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CodeSequence {
            codes,
            d: self.d,
            source_fps,
        })
    }

    /// Encodes normalized features (`frames × J·9`).
    pub fn encode(&self, features: &[f64], source_fps: f64) -> Result<CodeSequence> {
        let w = segment_windows(features, self.frame_dim(), self.d)?;
        self.encode_windows(&w, source_fps)
    }

    /// Concatenated centres for `codes`, still in normalized units.
    pub fn decode_features(&self, codes: &[usize]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(codes.len() * self.code_dim());
        for &c in codes {
            self.check_code(c)?;
            out.extend_from_slice(self.center(c));
        }
        Ok(out)
    }

    /// Centre of `code` mapped back to raw rotation-feature units (no
    /// re-orthonormalization); the space pose distances are measured in.
    pub fn decode_window_raw(&self, code: usize) -> Result<Vec<f64>> {
        self.check_code(code)?;
        Ok(self.norm.invert(self.center(code)))
    }

    /// Decodes a code sequence into motion: centres are de-normalized and
    /// every 3×3 block is projected onto the nearest rotation.
    pub fn decode(&self, cs: &CodeSequence) -> Result<MotionSequence> {
        if cs.is_empty() {
            return Err(Error::InvalidArgument("cannot decode an empty code sequence".into()));
        }
        let raw = self.norm.invert(&self.decode_features(&cs.codes)?);
        let mut rotations = Vec::with_capacity(raw.len());
        for block in raw.chunks_exact(ROT_DIM) {
            let m: &[f64; 9] = block.try_into().expect("block of nine");
            rotations.extend_from_slice(&nearest_rotation(m));
        }
        let frames = cs.len() * self.d;
        let fps = if cs.source_fps > 0.0 { cs.source_fps } else { 60.0 };
        MotionSequence::new(fps, rotations, vec![0.0; frames * 3], self.skeleton.clone())
    }
}

/// Diagnostic reconstruction and commitment terms of a quantized sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VqLosses {
    /// `Σ|ĝ − g|` over the covered frames.
    pub l1: f64,
    /// `Σ|Δĝ − Δg|`, first differences along time.
    pub velocity: f64,
    /// `Σ|Δ²ĝ − Δ²g|`.
    pub acceleration: f64,
    /// `l1 + α1·velocity + α2·acceleration`.
    pub reconstruction: f64,
    /// `‖g − g_q‖` over all windows (Frobenius).
    pub commitment: f64,
    /// `reconstruction + commitment + β·commitment`.
    pub total: f64,
}

/// Evaluates the VQ loss terms for normalized `features` encoded as `cs`.
pub fn vq_losses(
    features: &[f64],
    cs: &CodeSequence,
    cb: &Codebook,
    alpha1: f64,
    alpha2: f64,
    beta: f64,
) -> Result<VqLosses> {
    let fd = cb.frame_dim();
    let covered = cs.len() * cb.d * fd;
    if features.len() < covered {
        return Err(Error::DimensionMismatch {
            expected: covered,
            actual: features.len(),
            context: "features covered by the code sequence",
        });
    }
    let g = &features[..covered];
    let g_hat = cb.decode_features(&cs.codes)?;
    let frames = covered / fd;
    let l1: f64 = g.iter().zip(&g_hat).map(|(a, b)| (a - b).abs()).sum();
    let diff = |x: &[f64]| -> Vec<f64> {
        let n = x.len() / fd;
        (0..n.saturating_sub(1))
            .flat_map(|t| (0..fd).map(move |k| (t, k)))
            .map(|(t, k)| x[(t + 1) * fd + k] - x[t * fd + k])
            .collect()
    };
    let (v, v_hat) = (diff(g), diff(&g_hat));
    let velocity: f64 = v.iter().zip(&v_hat).map(|(a, b)| (a - b).abs()).sum();
    let acceleration: f64 = if frames >= 3 {
        diff(&v)
            .iter()
            .zip(&diff(&v_hat))
            .map(|(a, b)| (a - b).abs())
            .sum()
    } else {
        0.0
    };
    let commitment = g
        .iter()
        .zip(&g_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let reconstruction = l1 + alpha1 * velocity + alpha2 * acceleration;
    Ok(VqLosses {
        l1,
        velocity,
        acceleration,
        reconstruction,
        commitment,
        total: reconstruction + (1.0 + beta) * commitment,
    })
}

/// Occurrence counts per code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeHistogram {
    pub counts: BTreeMap<usize, usize>,
}

impl CodeHistogram {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// `(code, count)` by descending count, ties by ascending code.
    pub fn ranked(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self.counts.iter().map(|(&c, &n)| (c, n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// Dense count table over `code_count` codes.
    pub fn dense(&self, code_count: usize) -> Vec<usize> {
        let mut out = vec![0; code_count];
        for (&c, &n) in &self.counts {
            if c < code_count {
                out[c] = n;
            }
        }
        out
    }
}

pub fn code_histogram<'a>(sequences: impl IntoIterator<Item = &'a [usize]>) -> CodeHistogram {
    let mut h = CodeHistogram::default();
    for seq in sequences {
        for &c in seq {
            *h.counts.entry(c).or_insert(0) += 1;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::rotation::{euler_to_matrix, IDENTITY};
    use crate::motion::test_support::chain;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn flat_norm(dim: usize) -> FeatureNorm {
        FeatureNorm {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            clamped: vec![false; dim],
        }
    }

    fn toy_codebook(centers: Vec<f64>, d: usize) -> Codebook {
        let sk = chain(1);
        Codebook::new(centers, d, flat_norm(9), sk).unwrap()
    }

    #[test]
    fn window_counts() {
        let f = vec![0.0; 240 * 9];
        assert_eq!(segment_windows(&f, 9, 8).unwrap().len(), 30);
        assert_eq!(segment_windows(&f[..9 * 9], 9, 8).unwrap().len(), 1);
        assert!(segment_windows(&f[..7 * 9], 9, 8).is_err());
    }

    #[test]
    fn two_clusters_recover_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut data = Vec::new();
        let mut sums = [[0.0; 2]; 2];
        for i in 0..40 {
            let base = if i % 2 == 0 { -10.0 } else { 10.0 };
            let p = [base + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            sums[i % 2][0] += p[0] / 20.0;
            sums[i % 2][1] += p[1] / 20.0;
            data.extend_from_slice(&p);
        }
        let w = Windows { data, dim: 2 };
        let (c, report) = fit_kmeans(&w, 2, 1).unwrap();
        assert!(report.converged);
        let mut got: Vec<[f64; 2]> = c.chunks(2).map(|v| [v[0], v[1]]).collect();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (g, e) in got.iter().zip(&sums) {
            assert!((g[0] - e[0]).abs() < 1e-6 && (g[1] - e[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_windows_single_centre() {
        let w = Windows { data: [1.5, -2.0].repeat(10), dim: 2 };
        let (c, _) = fit_kmeans(&w, 1, 0).unwrap();
        assert_eq!(c, vec![1.5, -2.0]);
    }

    #[test]
    fn one_centre_per_window_has_zero_error() {
        let w = Windows { data: (0..12).map(f64::from).collect(), dim: 3 };
        let (_, report) = fit_kmeans(&w, 4, 9).unwrap();
        assert_eq!(*report.errors.last().unwrap(), 0.0);
    }

    #[test]
    fn duplicates_do_not_break_seeding() {
        let w = Windows { data: [0.0, 0.0, 0.0, 0.0, 1.0, 1.0].to_vec(), dim: 2 };
        let (c, _) = fit_kmeans(&w, 3, 5).unwrap();
        assert_eq!(c.len(), 6);
    }

    #[test]
    fn too_few_windows() {
        let w = Windows { data: vec![0.0; 4], dim: 2 };
        assert!(matches!(fit_kmeans(&w, 3, 0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn exact_and_tied_encoding() {
        let dim = 9 * 2;
        let mut centers = vec![0.0; 8 * dim];
        for c in 0..8 {
            centers[c * dim] = c as f64 * 10.0;
        }
        let cb = toy_codebook(centers.clone(), 2);
        assert_eq!(cb.quantize(&centers[7 * dim..8 * dim]).unwrap(), 7);

        // Centres 2 and 5 equidistant from a point on a separate axis.
        let mut c2 = vec![0.0; 8 * dim];
        for c in 0..8 {
            c2[c * dim + 1] = 100.0 + c as f64;
        }
        c2[2 * dim + 1] = 1.0;
        c2[5 * dim + 1] = -1.0;
        let cb = toy_codebook(c2, 2);
        assert_eq!(cb.quantize(&vec![0.0; dim]).unwrap(), 2);
        assert!(cb.quantize(&[0.0; 3]).is_err());
    }

    #[test]
    fn decode_repeated_code() {
        let r = euler_to_matrix(&[0, 1, 2], &[10.0, 20.0, 30.0]);
        let mut centers = IDENTITY.to_vec();
        centers.extend_from_slice(&r);
        let cb = toy_codebook(centers, 1);
        let m = cb
            .decode(&CodeSequence { codes: vec![1, 1, 1], d: 1, source_fps: 30.0 })
            .unwrap();
        assert_eq!(m.frames(), 3);
        for t in 0..3 {
            for (a, b) in m.rotation(t, 0).iter().zip(&r) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(matches!(
            cb.decode(&CodeSequence { codes: vec![2], d: 1, source_fps: 30.0 }),
            Err(Error::CodeOutOfRange { .. })
        ));
    }

    #[test]
    fn decode_of_encode_beats_every_assignment() {
        // Exhaustive over all 4^3 assignments of a 3-window sequence.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dim = 9;
        let centers: Vec<f64> = (0..4 * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cb = toy_codebook(centers, 1);
        let features: Vec<f64> = (0..3 * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cs = cb.encode(&features, 60.0).unwrap();
        let err = |codes: &[usize]| -> f64 {
            let rec = cb.decode_features(codes).unwrap();
            rec.iter().zip(&features).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let best = err(&cs.codes);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    assert!(best <= err(&[a, b, c]));
                }
            }
        }
    }

    #[test]
    fn losses_zero_for_exact_decode() {
        let centers: Vec<f64> = (0..18).map(|v| v as f64 * 0.1).collect();
        let cb = toy_codebook(centers.clone(), 1);
        let features = [&centers[9..18], &centers[0..9], &centers[9..18]].concat();
        let cs = cb.encode(&features, 60.0).unwrap();
        let l = vq_losses(&features, &cs, &cb, 1.0, 1.0, 0.25).unwrap();
        assert_eq!((l.l1, l.velocity, l.acceleration, l.commitment), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn losses_hand_computed() {
        // One code (all zeros), two frames of one joint; only entry 0 is nonzero.
        let cb = toy_codebook(vec![0.0; 9], 1);
        let mut features = vec![0.0; 18];
        features[0] = 1.0;
        features[9] = 3.0;
        let cs = CodeSequence { codes: vec![0, 0], d: 1, source_fps: 60.0 };
        let l = vq_losses(&features, &cs, &cb, 0.5, 2.0, 0.25).unwrap();
        // |1| + |3| = 4; velocity |0 − 2| = 2; no second difference.
        assert_eq!(l.l1, 4.0);
        assert_eq!(l.velocity, 2.0);
        assert_eq!(l.acceleration, 0.0);
        assert_eq!(l.reconstruction, 4.0 + 0.5 * 2.0);
        assert!((l.commitment - 10f64.sqrt()).abs() < 1e-15);
        assert!((l.total - (5.0 + 1.25 * 10f64.sqrt())).abs() < 1e-12);

        let plain = vq_losses(&features, &cs, &cb, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(plain.reconstruction, plain.l1);
    }

    #[test]
    fn histogram_cases() {
        let h = code_histogram([[3usize, 3, 5].as_slice()]);
        assert_eq!(h.counts, BTreeMap::from([(3, 2), (5, 1)]));
        assert!(code_histogram(std::iter::empty::<&[usize]>()).counts.is_empty());
        let planted = [vec![1, 7, 7, 2], vec![7, 7, 3, 1]];
        let h = code_histogram(planted.iter().map(Vec::as_slice));
        assert_eq!(h.ranked()[0], (7, 4));
        assert_eq!(h.total(), 8);
    }

    proptest! {
        #[test]
        fn encode_matches_exhaustive_scan(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 9;
            let centers: Vec<f64> = (0..6 * dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let cb = toy_codebook(centers.clone(), 1);
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let got = cb.quantize(&x).unwrap();
            let dists: Vec<f64> = centers.chunks(dim).map(|c| sq_dist(c, &x)).collect();
            let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(got, dists.iter().position(|&v| v == min).unwrap());
        }

        #[test]
        fn lloyd_error_never_increases(seed in 0u64..200, k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f64> = (0..60).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let w = Windows { data, dim: 3 };
            let (_, report) = fit_kmeans(&w, k, seed).unwrap();
            for pair in report.errors.windows(2) {
                prop_assert!(pair[1] <= pair[0], "{:?}", report.errors);
            }
        }
    }
}
