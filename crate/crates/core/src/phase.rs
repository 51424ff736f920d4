//! Phase manifold from periodic parameters of latent motion curves.
//!
//! Latent curves are the top principal components of z-scored rotational
//! velocities. Each channel is analysed over a sliding window: the FFT power
//! spectrum gives amplitude, dominant frequency and offset, the spectral
//! angle at the dominant bin gives the phase shift, and every frame maps to
//! `(A·sin 2πS, A·cos 2πS)` per channel.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{FeatureNorm, MotionSequence};
use crate::seqsim::cosine_unchecked;

/// Rotational velocity features `(x_t − x_{t−1})·fps`, one row per frame.
/// Frame 0 repeats frame 1 so the output keeps `T` rows.
pub fn rotational_velocity(m: &MotionSequence) -> Result<Vec<f64>> {
    let t = m.frames();
    if t < 2 {
        return Err(Error::InsufficientData(format!(
            "velocity needs at least 2 frames, got {t}"
        )));
    }
    let w = m.frame_dim();
    let mut out = vec![0.0; t * w];
    for f in 1..t {
        for k in 0..w {
            out[f * w + k] = (m.rotations[f * w + k] - m.rotations[(f - 1) * w + k]) * m.fps;
        }
    }
    let (head, rest) = out.split_at_mut(w);
    head.copy_from_slice(&rest[..w]);
    Ok(out)
}

/// Linear projection from z-scored velocity features onto latent channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    pub norm: FeatureNorm,
    /// `channels × dim`, rows are unit eigenvectors by descending eigenvalue.
    pub components: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub channels: usize,
}

impl PcaBasis {
    /// Fits on velocity buffers (`frames × dim` each).
    pub fn fit<'a>(
        dim: usize,
        channels: usize,
        buffers: impl IntoIterator<Item = &'a [f64]> + Clone,
    ) -> Result<Self> {
        if channels == 0 || channels > dim {
            return Err(Error::InvalidArgument(format!(
                "cannot extract {channels} channels from {dim} features"
            )));
        }
        let norm = FeatureNorm::fit(dim, buffers.clone())?;
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        let mut count = 0usize;
        for buf in buffers {
            let z = norm.apply(buf);
            for row in z.chunks_exact(dim) {
                for a in 0..dim {
                    if row[a] == 0.0 {
                        continue;
                    }
                    for b in a..dim {
                        cov[(a, b)] += row[a] * row[b];
                    }
                }
                count += 1;
            }
        }
        for a in 0..dim {
            for b in a..dim {
                let v = cov[(a, b)] / count as f64;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let mut components = Vec::with_capacity(channels * dim);
        let mut eigenvalues = Vec::with_capacity(channels);
        for &idx in order.iter().take(channels) {
            let col = eig.eigenvectors.column(idx);
            // Sign convention: the largest-magnitude entry is positive.
            let pivot = col
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, &v)| {
                    if v.abs() > best.1.abs() + 1e-12 {
                        (i, v)
                    } else {
                        best
                    }
                })
                .1;
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            components.extend(col.iter().map(|v| v * sign));
            eigenvalues.push(eig.eigenvalues[idx].max(0.0));
        }
        Ok(PcaBasis {
            norm,
            components,
            eigenvalues,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let d = self.dim();
        &self.components[c * d..(c + 1) * d]
    }

    /// Projects a `frames × dim` velocity buffer to `frames × channels`.
    pub fn project(&self, velocity: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if velocity.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: velocity.len() % d,
                context: "velocity rows",
            });
        }
        let z = self.norm.apply(velocity);
        let mut out = Vec::with_capacity(z.len() / d * self.channels);
        for row in z.chunks_exact(d) {
            for c in 0..self.channels {
                out.push(row.iter().zip(self.component(c)).map(|(a, b)| a * b).sum());
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentCurves {
    /// `frames × channels`.
    pub values: Vec<f64>,
    pub channels: usize,
    pub fps: f64,
}

impl LatentCurves {
    pub fn frames(&self) -> usize {
        self.values.len() / self.channels
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.channels).copied().collect()
    }
}

pub fn build_latent_curves(m: &MotionSequence, basis: &PcaBasis) -> Result<LatentCurves> {
    let v = rotational_velocity(m)?;
    Ok(LatentCurves {
        values: basis.project(&v)?,
        channels: basis.channels,
        fps: m.fps,
    })
}

/// Periodic parameters of one channel over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    pub offset: f64,
    /// Cycles, in `[−½, ½)`, relative to the window centre.
    pub shift: f64,
    /// False when the window has no AC energy; frequency and shift are then 0.
    pub defined: bool,
}

/// Parameters for every channel of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicParams {
    pub channels: Vec<ChannelParams>,
}

fn wrap_half(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Reusable FFT plans keyed by window length.
pub struct SpectralAnalyzer {
    planner: FftPlanner<f64>,
    plans: Vec<(usize, Arc<dyn Fft<f64>>)>,
    buf: Vec<Complex<f64>>,
}

impl Default for SpectralAnalyzer {
    fn default() -> Self {
        SpectralAnalyzer {
            planner: FftPlanner::new(),
            plans: Vec::new(),
            buf: Vec::new(),
        }
    }
}

impl SpectralAnalyzer {
    fn plan(&mut self, n: usize) -> Arc<dyn Fft<f64>> {
        if let Some((_, p)) = self.plans.iter().find(|(len, _)| *len == n) {
            return p.clone();
        }
        let p = self.planner.plan_fft_forward(n);
        self.plans.push((n, p.clone()));
        p
    }

    /// Amplitude, frequency, offset and phase shift of `window`, sampled
    /// uniformly over `seconds`.
    pub fn analyze(&mut self, window: &[f64], seconds: f64) -> Result<ChannelParams> {
        let n = window.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "periodic parameters need at least 2 samples, got {n}"
            )));
        }
        if !(seconds > 0.0) {
            return Err(Error::InvalidArgument("window duration must be positive".into()));
        }
        let plan = self.plan(n);
        self.buf.clear();
        self.buf.extend(window.iter().map(|&v| Complex::new(v, 0.0)));
        plan.process(&mut self.buf);
        let c = &self.buf;
        let tf = n as f64;
        let k = n / 2;
        let offset = c[0].re / tf;
        let mut power_sum = 0.0;
        let mut weighted = 0.0;
        for j in 1..=k {
            let p = 2.0 / tf * c[j].norm_sqr();
            power_sum += p;
            weighted += (j as f64 / seconds) * p;
        }
        let amplitude = (2.0 / tf * power_sum).sqrt();
        if !(amplitude > 1e-12 * offset.abs().max(1.0)) {
            return Ok(ChannelParams {
                amplitude: 0.0,
                frequency: 0.0,
                offset,
                shift: 0.0,
                defined: false,
            });
        }
        let frequency = weighted / power_sum;
        let bin = ((frequency * seconds).round() as usize).clamp(1, k);
        // Phase of the dominant bin, moved from sample 0 to the window centre.
        let centre = (tf - 1.0) / 2.0 * seconds / tf;
        let angle = c[bin].arg() + 2.0 * PI * (bin as f64 / seconds) * centre;
        // A·sin(2π(F·τ − S)) has phase −2πS − π/2 in cosine form.
        let shift = wrap_half(-(angle + PI / 2.0) / (2.0 * PI));
        Ok(ChannelParams {
            amplitude,
            frequency,
            offset,
            shift,
            defined: true,
        })
    }
}

/// Periodic parameters of a single window; see [`SpectralAnalyzer::analyze`].
pub fn periodic_params(window: &[f64], seconds: f64) -> Result<ChannelParams> {
    SpectralAnalyzer::default().analyze(window, seconds)
}

/// Parameters of every channel of `curves` over frames `[lo, hi)`.
pub fn window_params(curves: &LatentCurves, lo: usize, hi: usize) -> Result<PeriodicParams> {
    if lo >= hi || hi > curves.frames() {
        return Err(Error::InvalidArgument(format!(
            "frame range {lo}..{hi} outside 0..{}",
            curves.frames()
        )));
    }
    let seconds = (hi - lo) as f64 / curves.fps;
    let mut analyzer = SpectralAnalyzer::default();
    let channels = (0..curves.channels)
        .map(|c| analyzer.analyze(&curves.channel(c)[lo..hi], seconds))
        .collect::<Result<Vec<_>>>()?;
    Ok(PeriodicParams { channels })
}

/// Evaluates `A·sin(2π(F·τ − S)) + B` on the centred time grid of a window of
/// `samples` points spanning `seconds`.
pub fn reconstruct_curve(p: &ChannelParams, samples: usize, seconds: f64) -> Vec<f64> {
    let dt = seconds / samples as f64;
    let mid = (samples as f64 - 1.0) / 2.0;
    (0..samples)
        .map(|i| {
            let tau = (i as f64 - mid) * dt;
            p.amplitude * (2.0 * PI * (p.frequency * tau - p.shift)).sin() + p.offset
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseManifold {
    /// `frames × 2·channels`: per channel `(A·sin 2πS, A·cos 2πS)`.
    pub values: Vec<f64>,
    /// `frames × channels`, amplitude of each frame's window.
    pub amplitudes: Vec<f64>,
    pub channels: usize,
}

impl PhaseManifold {
    pub fn width(&self) -> usize {
        2 * self.channels
    }

    pub fn frames(&self) -> usize {
        self.values.len() / self.width()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let w = self.width();
        &self.values[t * w..(t + 1) * w]
    }

    /// `n_phase` frames starting at the first frame of `step`, clamped to the
    /// last frame, flattened.
    pub fn step_window(&self, step: usize, d: usize, n_phase: usize) -> Vec<f64> {
        let last = self.frames().saturating_sub(1);
        let mut out = Vec::with_capacity(n_phase * self.width());
        for i in 0..n_phase {
            out.extend_from_slice(self.frame((step * d + i).min(last)));
        }
        out
    }
}

/// Sliding centred window of `window_frames` (odd) per frame; windows are
/// clipped at the sequence edges.
pub fn phase_manifold(curves: &LatentCurves, window_frames: usize) -> Result<PhaseManifold> {
    let frames = curves.frames();
    if window_frames % 2 == 0 || window_frames < 3 {
        return Err(Error::InvalidArgument(format!(
            "phase window must be odd and at least 3, got {window_frames}"
        )));
    }
    if window_frames > frames {
        return Err(Error::InsufficientData(format!(
            "phase window of {window_frames} frames exceeds the {frames}-frame sequence"
        )));
    }
    let half = window_frames / 2;
    let m = curves.channels;
    let mut analyzer = SpectralAnalyzer::default();
    let mut values = Vec::with_capacity(frames * 2 * m);
    let mut amplitudes = Vec::with_capacity(frames * m);
    let channels: Vec<Vec<f64>> = (0..m).map(|c| curves.channel(c)).collect();
    for t in 0..frames {
        let lo = t.saturating_sub(half);
        let hi = (t + half + 1).min(frames);
        let seconds = (hi - lo) as f64 / curves.fps;
        for ch in &channels {
            let p = analyzer.analyze(&ch[lo..hi], seconds)?;
            let (s, c) = (2.0 * PI * p.shift).sin_cos();
            values.push(p.amplitude * s);
            values.push(p.amplitude * c);
            amplitudes.push(p.amplitude);
        }
    }
    Ok(PhaseManifold {
        values,
        amplitudes,
        channels: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuity {
    /// `1 − cos(u, v)`, in `[0, 2]`.
    pub score: f64,
    pub degenerate: bool,
}

/// Phase continuity between the tail of `prev` and the head of `cand`, both
/// flattened `frames × width` manifold slices.
///
/// With `a = n_phase − n_stride`, compares
/// `u = prev[last a] ++ cand[first n_stride]` against
/// `v = prev[last n_stride] ++ cand[first a]`.
pub fn continuity_distance(
    prev: &[f64],
    cand: &[f64],
    width: usize,
    n_phase: usize,
    n_stride: usize,
) -> Result<Continuity> {
    if width == 0 || n_stride == 0 || n_stride >= n_phase {
        return Err(Error::InvalidArgument(format!(
            "need 0 < n_stride < n_phase, got {n_stride} and {n_phase}"
        )));
    }
    let pf = prev.len() / width;
    let cf = cand.len() / width;
    if pf < n_phase || cf < n_phase {
        return Err(Error::InsufficientData(format!(
            "continuity needs {n_phase} frames on both sides, got {pf} and {cf}"
        )));
    }
    let a = n_phase - n_stride;
    let tail = |k: usize| &prev[(pf - k) * width..pf * width];
    let head = |k: usize| &cand[..k * width];
    let u: Vec<f64> = tail(a).iter().chain(head(n_stride)).copied().collect();
    let v: Vec<f64> = tail(n_stride).iter().chain(head(a)).copied().collect();
    let cos = cosine_unchecked(&u, &v);
    Ok(Continuity {
        score: if cos.degenerate { 0.0 } else { 1.0 - cos.value },
        degenerate: cos.degenerate,
    })
}
