//! Envelope recovery from the squared whitened signal.
//!
//! `E{y²(t)}` is estimated in the frequency domain: the Welch-averaged DFT
//! magnitude of `y²` is gated down to its dominant lines, recombined with
//! per-frame phases and overlap-added back to the time domain. The envelope
//! then follows as `q̂ = √(E{y²} - σ_w²)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::signals::SignalBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// Periodic Hann, `0.5 - 0.5 cos(2πj/L)`.
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / len as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

/// Which frame phases are paired with the averaged amplitude on synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseSource {
    /// Every frame uses its own phase; frames are overlap-added.
    #[default]
    PerFrame,
    /// Only frame 0 is synthesized and tiled with period `L`.
    SingleFrame,
}

/// Welch-averaged DFT magnitude of `y²` with the phases of every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    amplitude: Vec<f64>,
    frame_phases: Vec<Vec<f64>>,
    hop: usize,
    window: Window,
    gated: bool,
}

impl SpectralEstimate {
    /// Assembles an estimate from its parts. `amplitude` must be non-negative
    /// and conjugate symmetric; each phase row must have the same length.
    pub fn new(amplitude: Vec<f64>, frame_phases: Vec<Vec<f64>>, hop: usize, window: Window) -> Result<Self> {
        let l = amplitude.len();
        if l < 2 {
            return Err(Error::param("amplitude", "needs at least two bins"));
        }
        if amplitude.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::param("amplitude", "bins must be finite and non-negative"));
        }
        let peak = amplitude.iter().fold(0.0f64, |m, &a| m.max(a));
        for k in 1..l {
            if (amplitude[k] - amplitude[l - k]).abs() > 1e-9 * peak {
                return Err(Error::param("amplitude", format!("bin {k} breaks conjugate symmetry")));
            }
        }
        if frame_phases.is_empty() {
            return Err(Error::param("frame_phases", "at least one frame is required"));
        }
        if let Some(row) = frame_phases.iter().find(|p| p.len() != l) {
            return Err(Error::LengthMismatch { left: row.len(), right: l });
        }
        if hop == 0 {
            return Err(Error::param("hop", "must be positive"));
        }
        Ok(Self {
            amplitude,
            frame_phases,
            hop,
            window,
            gated: false,
        })
    }

    pub fn frame_length(&self) -> usize {
        self.amplitude.len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn n_frames(&self) -> usize {
        self.frame_phases.len()
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn frame_phases(&self) -> &[Vec<f64>] {
        &self.frame_phases
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Whether peak gating has been applied. Gated spectra are synthesized as
    /// line spectra; ungated ones by windowed overlap-add.
    pub fn is_gated(&self) -> bool {
        self.gated
    }
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// Welch average of `|DFT|` over windowed frames of `y2`.
///
/// Frames of length `frame_length` start every `round(L·(1 - overlap))`
/// samples; trailing samples that do not fill a frame are not analysed.
pub fn welch_average_amplitude(y2: &SignalBuffer, frame_length: usize, overlap: f64, window: Window) -> Result<SpectralEstimate> {
    welch_average_amplitude_with(Execution::default(), y2, frame_length, overlap, window)
}

pub fn welch_average_amplitude_with(
    exec: Execution,
    y2: &SignalBuffer,
    frame_length: usize,
    overlap: f64,
    window: Window,
) -> Result<SpectralEstimate> {
    let l = frame_length;
    let n = y2.len();
    if l < 16 || l % 2 == 1 {
        return Err(Error::param("frame_length", format!("must be even and at least 16, got {l}")));
    }
    if !(0.0..=0.9).contains(&overlap) {
        return Err(Error::param("overlap_fraction", format!("must lie in [0, 0.9], got {overlap}")));
    }
    if l > n {
        return Err(Error::FrameTooLong { frame: l, len: n });
    }
    let hop = ((l as f64 * (1.0 - overlap)).round() as usize).max(1);
    let n_frames = (n - l) / hop + 1;
    let w = window.coefficients(l);
    let fft = plan(l, false);
    let s = y2.samples();

    let spectra: Vec<Vec<Complex64>> = par::map_range(exec, n_frames, |f| {
        let start = f * hop;
        let mut buf: Vec<Complex64> = s[start..start + l]
            .iter()
            .zip(&w)
            .map(|(v, wj)| Complex64::new(v * wj, 0.0))
            .collect();
        fft.process(&mut buf);
        buf
    });

    let mut amplitude = vec![0.0; l];
    for spectrum in &spectra {
        for (a, z) in amplitude.iter_mut().zip(spectrum) {
            *a += z.norm();
        }
    }
    for a in &mut amplitude {
        *a /= n_frames as f64;
    }
    for k in 1..l / 2 {
        let m = 0.5 * (amplitude[k] + amplitude[l - k]);
        amplitude[k] = m;
        amplitude[l - k] = m;
    }
    let frame_phases = spectra
        .iter()
        .map(|spectrum| spectrum.iter().map(|z| z.arg()).collect())
        .collect();
    SpectralEstimate::new(amplitude, frame_phases, hop, window)
}

/// Default robust-spread multiplier for [`gate_peaks_by_median`].
pub const DEFAULT_GATE_SPREAD: f64 = 4.0;

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

fn sorted(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = v.collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Keeps DC and the local maxima that stand out from the noise floor.
///
/// The threshold is `median + spread · 1.4826 · MAD` over the non-DC bins;
/// `spread = 0` keeps every local maximum strictly above the median. A bin is
/// a local maximum when it exceeds its left neighbour and the first differing
/// bin to its right, so a plateau is represented by its leftmost bin. Every
/// kept bin keeps its conjugate partner; all other bins are zeroed.
pub fn gate_peaks_by_median(spec: &SpectralEstimate, spread: f64) -> Result<SpectralEstimate> {
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(Error::param("gate_spread", "must be finite and non-negative"));
    }
    let a = &spec.amplitude;
    let l = a.len();
    let floor = sorted(a[1..].iter().copied());
    let med = median(&floor);
    let mad = 1.4826 * median(&sorted(floor.iter().map(|v| (v - med).abs())));
    let threshold = med + spread * mad;

    let mut keep = vec![false; l];
    keep[0] = true;
    for k in 1..l {
        if a[k] <= threshold || a[k] <= a[k - 1] {
            continue;
        }
        let right = (1..l).map(|d| a[(k + d) % l]).find(|&v| v != a[k]);
        if right.is_some_and(|v| v < a[k]) {
            keep[k] = true;
            keep[l - k] = true;
        }
    }
    let amplitude = a.iter().zip(&keep).map(|(&v, &k)| if k { v } else { 0.0 }).collect();
    Ok(SpectralEstimate {
        amplitude,
        gated: true,
        ..spec.clone()
    })
}

/// Synthesizes one frame: `IFFT(A · e^{+j∠X_f})`.
fn synthesize(ifft: &dyn Fft<f64>, amplitude: &[f64], phases: &[f64]) -> Vec<f64> {
    let l = amplitude.len();
    let mut buf: Vec<Complex64> = amplitude
        .iter()
        .zip(phases)
        .map(|(&a, &p)| Complex64::from_polar(a, p))
        .collect();
    ifft.process(&mut buf);
    buf.iter().map(|z| z.re / l as f64).collect()
}

/// Fraction of the peak overlap weight below which a sample counts as uncovered.
const COVERAGE: f64 = 0.1;

/// Estimate of `E{y²(t)}` of length `n_samples` from a spectral estimate.
pub fn reconstruct_power(spec: &SpectralEstimate, n_samples: usize) -> Result<SignalBuffer> {
    reconstruct_power_with(Execution::default(), spec, n_samples, PhaseSource::PerFrame)
}

/// Per-frame synthesis follows the estimate's gating state: a gated spectrum
/// is a sum of lines, so each frame is divided by the window's coherent gain
/// and frames are averaged with window weights; an ungated spectrum is
/// overlap-added and normalized by the summed window. Samples with too little
/// window coverage take the periodic continuation of the nearest frame when
/// gated, and the nearest covered value otherwise.
pub fn reconstruct_power_with(
    exec: Execution,
    spec: &SpectralEstimate,
    n_samples: usize,
    phases: PhaseSource,
) -> Result<SignalBuffer> {
    let l = spec.frame_length();
    if l > n_samples {
        return Err(Error::FrameTooLong { frame: l, len: n_samples });
    }
    let w = spec.window.coefficients(l);
    let gain = w.iter().sum::<f64>() / l as f64;
    let ifft = plan(l, true);

    if phases == PhaseSource::SingleFrame {
        let seg = synthesize(ifft.as_ref(), &spec.amplitude, &spec.frame_phases[0]);
        let mut period: Vec<Option<f64>> = if spec.gated {
            seg.iter().map(|v| Some(v / gain)).collect()
        } else {
            let peak = w.iter().fold(0.0f64, |m, &v| m.max(v));
            seg.iter()
                .zip(&w)
                .map(|(v, &wj)| (wj >= COVERAGE * peak).then(|| v / wj))
                .collect()
        };
        fill_nearest(&mut period);
        let period: Vec<f64> = period.into_iter().map(|v| v.unwrap_or(0.0)).collect();
        return SignalBuffer::from_samples((0..n_samples).map(|t| period[t % l]).collect());
    }

    let frames: Vec<usize> = (0..spec.n_frames()).filter(|f| f * spec.hop + l <= n_samples).collect();
    let segments = par::map_range(exec, frames.len(), |i| {
        synthesize(ifft.as_ref(), &spec.amplitude, &spec.frame_phases[frames[i]])
    });

    let mut num = vec![0.0; n_samples];
    let mut den = vec![0.0; n_samples];
    for (&f, seg) in frames.iter().zip(&segments) {
        let start = f * spec.hop;
        for j in 0..l {
            num[start + j] += if spec.gated { w[j] * seg[j] / gain } else { seg[j] };
            den[start + j] += w[j];
        }
    }
    let peak = den.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut out: Vec<Option<f64>> = num
        .iter()
        .zip(&den)
        .map(|(&nv, &dv)| (dv > 0.0 && dv >= COVERAGE * peak).then(|| nv / dv))
        .collect();
    if spec.gated && !frames.is_empty() {
        // Continue the nearest frame's line spectrum periodically.
        let starts: Vec<usize> = frames.iter().map(|f| f * spec.hop).collect();
        for (t, v) in out.iter_mut().enumerate() {
            if v.is_none() {
                let i = starts.partition_point(|&s| s + l / 2 <= t);
                let i = match i {
                    0 => 0,
                    i if i == starts.len() => i - 1,
                    i if t - (starts[i - 1] + l / 2) <= starts[i] + l / 2 - t => i - 1,
                    i => i,
                };
                let j = (t as isize - starts[i] as isize).rem_euclid(l as isize) as usize;
                *v = Some(segments[i][j] / gain);
            }
        }
    }
    fill_nearest(&mut out);
    SignalBuffer::from_samples(out.into_iter().map(|v| v.unwrap_or(0.0)).collect())
}

/// Replaces gaps with the nearest defined value; leading gaps take the first
/// defined value and interior gaps are interpolated linearly.
fn fill_nearest(v: &mut [Option<f64>]) {
    let defined: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_some()).collect();
    let (Some(&first), Some(&last)) = (defined.first(), defined.last()) else {
        return;
    };
    let head = v[first];
    let tail = v[last];
    v[..first].iter_mut().for_each(|x| *x = head);
    v[last + 1..].iter_mut().for_each(|x| *x = tail);
    for pair in defined.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b > a + 1 {
            let (va, vb) = (v[a].unwrap(), v[b].unwrap());
            for i in a + 1..b {
                let frac = (i - a) as f64 / (b - a) as f64;
                v[i] = Some(va + frac * (vb - va));
            }
        }
    }
}

/// How the noise variance was removed from the power estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    /// `σ_w²` was supplied; the estimate is unbiased.
    KnownNoise,
    /// `σ_w²` was replaced by `min(power)`, forcing `min q̂ = 0`.
    MinSubtraction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeEstimate {
    pub q_hat: SignalBuffer,
    pub sigma_w2_used: f64,
    pub bias_mode: BiasMode,
    /// Fraction of samples whose radicand was negative and clamped to zero.
    pub clipped_fraction: f64,
}

/// `q̂ = √max(power - σ_w², 0)`, with `σ_w² = min(power)` when unknown.
pub fn estimate_envelope(power: &SignalBuffer, sigma_w2: Option<f64>) -> Result<EnvelopeEstimate> {
    let p = power.samples();
    let (sigma, bias_mode) = match sigma_w2 {
        Some(s) if !(s.is_finite() && s >= 0.0) => return Err(Error::NegativeNoiseVariance(s)),
        Some(s) => (s, BiasMode::KnownNoise),
        None => (p.iter().copied().fold(f64::INFINITY, f64::min), BiasMode::MinSubtraction),
    };
    let mut clipped = 0usize;
    let q: Vec<f64> = p
        .iter()
        .map(|&v| {
            let d = v - sigma;
            if d < 0.0 {
                clipped += 1;
                0.0
            } else {
                d.sqrt()
            }
        })
        .collect();
    Ok(EnvelopeEstimate {
        q_hat: SignalBuffer::new(q, power.sample_rate())?,
        sigma_w2_used: sigma,
        bias_mode,
        clipped_fraction: clipped as f64 / p.len() as f64,
    })
}
