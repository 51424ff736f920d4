//! Objective gesture metrics: speed-histogram Hellinger distance, Fréchet
//! distance on raw poses, first canonical correlation, jerk and
//! acceleration, diversity and beat alignment.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{finite_difference, joint_speeds, PositionSequence};

/// Ridge added to both covariances in CCA.
pub const CCA_RIDGE: f64 = 1e-6;

/// Default beat-alignment kernel width, seconds.
pub const BEAT_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedHistogram {
    pub bin_edges: Vec<f64>,
    /// Probability per bin; sums to 1.
    pub mass: Vec<f64>,
}

/// `bins + 1` edges of width `width` starting at 0.
pub fn uniform_edges(width: f64, max: f64) -> Result<Vec<f64>> {
    if !(width > 0.0) || !(max > width) {
        return Err(Error::InvalidArgument(format!(
            "histogram needs 0 < width < max, got {width} and {max}"
        )));
    }
    let bins = (max / width).round() as usize;
    Ok((0..=bins).map(|i| i as f64 * width).collect())
}

impl SpeedHistogram {
    /// Normalized counts of `speeds` over `edges`; values past the last edge
    /// land in the last bin and values below the first in the first.
    pub fn new(speeds: &[f64], edges: &[f64]) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("histogram edges must increase".into()));
        }
        if speeds.is_empty() {
            return Err(Error::InsufficientData("no speeds to histogram".into()));
        }
        let bins = edges.len() - 1;
        let mut counts = vec![0usize; bins];
        for &s in speeds {
            if !s.is_finite() {
                return Err(Error::NonFinite("joint speeds"));
            }
            let i = edges.partition_point(|&e| e <= s).saturating_sub(1).min(bins - 1);
            counts[i] += 1;
        }
        let n = speeds.len() as f64;
        Ok(SpeedHistogram {
            bin_edges: edges.to_vec(),
            mass: counts.into_iter().map(|c| c as f64 / n).collect(),
        })
    }
}

/// Hellinger distance, evaluated as `sqrt(½·Σ(√p − √q)²)`, which equals
/// `sqrt(1 − Σ√(p·q))` for normalized histograms and is exactly zero for
/// identical ones.
pub fn hellinger(a: &SpeedHistogram, b: &SpeedHistogram) -> Result<f64> {
    if a.bin_edges != b.bin_edges {
        return Err(Error::InvalidArgument("histograms use different bin edges".into()));
    }
    let s: f64 = a
        .mass
        .iter()
        .zip(&b.mass)
        .map(|(p, q)| (p.sqrt() - q.sqrt()).powi(2))
        .sum();
    Ok((0.5 * s).sqrt().min(1.0))
}

/// One histogram per joint, pooling the frames of every sequence.
pub fn joint_speed_histograms(seqs: &[PositionSequence], edges: &[f64]) -> Result<Vec<SpeedHistogram>> {
    let joints = seqs
        .first()
        .ok_or_else(|| Error::InsufficientData("no sequences".into()))?
        .joints;
    let mut per_joint = vec![Vec::new(); joints];
    for p in seqs {
        if p.joints != joints {
            return Err(Error::DimensionMismatch {
                expected: joints,
                actual: p.joints,
                context: "joints per sequence",
            });
        }
        for (i, s) in joint_speeds(p)?.into_iter().enumerate() {
            per_joint[i % joints].push(s);
        }
    }
    per_joint.iter().map(|s| SpeedHistogram::new(s, edges)).collect()
}

/// Mean per-joint Hellinger distance between pooled speed histograms.
pub fn hellinger_average(
    reference: &[PositionSequence],
    generated: &[PositionSequence],
    edges: &[f64],
) -> Result<f64> {
    let a = joint_speed_histograms(reference, edges)?;
    let b = joint_speed_histograms(generated, edges)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
            context: "joints of generated motion",
        });
    }
    let total = a
        .iter()
        .zip(&b)
        .map(|(x, y)| hellinger(x, y))
        .sum::<Result<f64>>()?;
    Ok(total / a.len() as f64)
}

/// Rows of a `samples × dim` buffer as a matrix.
fn matrix(rows: &[f64], dim: usize, what: &'static str) -> Result<DMatrix<f64>> {
    if dim == 0 || rows.len() % dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rows.len(),
            context: what,
        });
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(DMatrix::from_row_slice(rows.len() / dim, dim, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianSummary {
    /// Sample mean and unbiased covariance. With no more samples than
    /// dimensions a `1e-6·I` ridge keeps the covariance definite.
    pub fn fit(rows: &[f64], dim: usize) -> Result<Self> {
        let x = matrix(rows, dim, "pose samples")?;
        let n = x.nrows();
        if n < 2 {
            return Err(Error::InsufficientData(format!("need at least 2 samples, got {n}")));
        }
        let mean = x.row_mean().transpose();
        let mut centred = x;
        for mut r in centred.row_iter_mut() {
            r -= mean.transpose();
        }
        let mut covariance = centred.transpose() * &centred / (n - 1) as f64;
        covariance = (&covariance + covariance.transpose()) * 0.5;
        if n <= dim {
            covariance += DMatrix::identity(dim, dim) * 1e-6;
        }
        Ok(GaussianSummary { mean, covariance })
    }
}

/// Symmetric square root with negative eigenvalues floored at zero.
fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let root = e.eigenvalues.map(|v| v.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&root) * e.eigenvectors.transpose()
}

/// `‖μ1 − μ2‖² + Tr(Σ1 + Σ2 − 2(Σ1Σ2)^½)`. The trace of the cross term is
/// taken as `Tr((Σ1^½ Σ2 Σ1^½)^½)`, whose argument is symmetric.
pub fn frechet_distance(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: a.mean.len(),
            actual: b.mean.len(),
            context: "Gaussian dimension",
        });
    }
    let diff = (&a.mean - &b.mean).norm_squared();
    let s1 = sqrt_psd(&a.covariance);
    let inner = &s1 * &b.covariance * &s1;
    let cross: f64 = SymmetricEigen::new((&inner + inner.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    let value = diff + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    Ok(value.max(0.0))
}

/// Fréchet distance between Gaussians fitted to raw pose rows.
pub fn fgd_raw(real: &[f64], generated: &[f64], dim: usize) -> Result<f64> {
    frechet_distance(&GaussianSummary::fit(real, dim)?, &GaussianSummary::fit(generated, dim)?)
}

fn inverse_sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let inv = e.eigenvalues.map(|v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&inv) * e.eigenvectors.transpose()
}

/// First canonical correlation of paired rows of `x` (`T × p`) and `y`
/// (`T × q`): the top singular value of `Cxx^-½ Cxy Cyy^-½`, with `ridge`
/// added to both auto-covariances.
pub fn cca_first(x: &[f64], p: usize, y: &[f64], q: usize, ridge: f64) -> Result<f64> {
    let mx = matrix(x, p, "CCA input X")?;
    let my = matrix(y, q, "CCA input Y")?;
    let t = mx.nrows();
    if my.nrows() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            actual: my.nrows(),
            context: "CCA rows",
        });
    }
    if t < 2 {
        return Err(Error::InsufficientData(format!("CCA needs at least 2 rows, got {t}")));
    }
    let centre = |m: DMatrix<f64>| {
        let mean = m.row_mean();
        let mut c = m;
        for mut r in c.row_iter_mut() {
            r -= &mean;
        }
        c
    };
    let (cx, cy) = (centre(mx), centre(my));
    let scale = 1.0 / (t - 1) as f64;
    let sxx = cx.transpose() * &cx * scale + DMatrix::identity(p, p) * ridge;
    let syy = cy.transpose() * &cy * scale + DMatrix::identity(q, q) * ridge;
    let sxy = cx.transpose() * &cy * scale;
    let k = inverse_sqrt_psd(&sxx) * sxy * inverse_sqrt_psd(&syy);
    let top = k.singular_values().iter().copied().fold(0.0, f64::max);
    Ok(top.clamp(0.0, 1.0))
}

/// Mean of per-pair first canonical correlations.
pub fn cca_per_sequence(pairs: &[(&[f64], &[f64])], p: usize, q: usize, ridge: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no sequence pairs".into()));
    }
    let total = pairs
        .iter()
        .map(|(x, y)| cca_first(x, p, y, q, ridge))
        .sum::<Result<f64>>()?;
    Ok(total / pairs.len() as f64)
}

fn mean_norm(p: &PositionSequence, order: usize) -> Result<f64> {
    if p.frames() <= 3 {
        return Err(Error::InsufficientData(format!(
            "need more than 3 frames, got {}",
            p.frames()
        )));
    }
    let d = finite_difference(p, order)?;
    let n = d.positions.len() / 3;
    let total: f64 = d
        .positions
        .chunks_exact(3)
        .map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt())
        .sum();
    Ok(total / n as f64)
}

/// Mean third-derivative magnitude over frames and joints.
pub fn average_jerk(p: &PositionSequence) -> Result<f64> {
    mean_norm(p, 3)
}

/// Mean second-derivative magnitude over frames and joints.
pub fn average_acceleration(p: &PositionSequence) -> Result<f64> {
    mean_norm(p, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSpread {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

pub fn mean_spread(values: &[f64]) -> Result<MeanSpread> {
    if values.is_empty() {
        return Err(Error::InsufficientData("no values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(MeanSpread {
        mean,
        std: var.sqrt(),
    })
}

/// Mean Euclidean distance over `pairs` seeded random pairs of distinct
/// clip vectors (`clips × dim`).
pub fn diversity(features: &[f64], dim: usize, pairs: usize, seed: u64) -> Result<f64> {
    let m = matrix(features, dim, "diversity features")?;
    let n = m.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!("diversity needs 2 clips, got {n}")));
    }
    if pairs == 0 {
        return Err(Error::InvalidArgument("pair count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..pairs {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        total += (m.row(i) - m.row(j)).norm();
    }
    Ok(total / pairs as f64)
}

/// Mean pose vector of each sequence, `sequences × dim`.
pub fn mean_pose_vectors(seqs: &[PositionSequence]) -> Vec<f64> {
    let mut out = Vec::new();
    for p in seqs {
        let w = p.joints * 3;
        let mut m = vec![0.0; w];
        for t in 0..p.frames() {
            for (a, v) in m.iter_mut().zip(p.frame(t)) {
                *a += v;
            }
        }
        out.extend(m.into_iter().map(|v| v / p.frames().max(1) as f64));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatAlign {
    pub score: f64,
    /// Set when there were no gesture beats; the score is then 0.
    pub no_gesture_beats: bool,
}

/// `mean_a exp(−min_g (t_a − t_g)² / 2σ²)` over audio beats `a`.
pub fn beat_align(audio: &[f64], gesture: &[f64], sigma: f64) -> Result<BeatAlign> {
    if audio.is_empty() {
        return Err(Error::InsufficientData("no audio beats".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument("beat kernel width must be positive".into()));
    }
    if gesture.is_empty() {
        return Ok(BeatAlign {
            score: 0.0,
            no_gesture_beats: true,
        });
    }
    let total: f64 = audio
        .iter()
        .map(|a| {
            let d2 = gesture.iter().map(|g| (a - g) * (a - g)).fold(f64::INFINITY, f64::min);
            (-d2 / (2.0 * sigma * sigma)).exp()
        })
        .sum();
    Ok(BeatAlign {
        score: total / audio.len() as f64,
        no_gesture_beats: false,
    })
}

/// Times of strict local minima of the mean joint speed. Speed sample `i`
/// spans frames `i` and `i + 1` and is stamped at `(i + ½)/fps`.
pub fn gesture_beats(p: &PositionSequence) -> Result<Vec<f64>> {
    let speeds = joint_speeds(p)?;
    let mean: Vec<f64> = speeds
        .chunks_exact(p.joints)
        .map(|c| c.iter().sum::<f64>() / p.joints as f64)
        .collect();
    Ok((1..mean.len().saturating_sub(1))
        .filter(|&i| mean[i] < mean[i - 1] && mean[i] < mean[i + 1])
        .map(|i| (i as f64 + 0.5) / p.fps)
        .collect())
}
