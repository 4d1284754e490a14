//! FFT analysis of probability traces.
//!
//! Magnitudes use the one-sided `2/N` amplitude convention: a sampled `A cos(w t)` that
//! falls on a bin reports magnitude `A` (rectangular window). DC and Nyquist bins use `1/N`.
//! A Hann window scales an on-bin peak by [`HANN_PEAK_FACTOR`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::trace::ProbabilityTrace;

/// Minimum trace length accepted by [`compute_spectrum`].
pub const MIN_SAMPLES: usize = 16;

/// Quality threshold for a harmonic to count as present.
pub const PRESENCE_QUALITY: f64 = 5.0;

/// Ratio of Hann to rectangular magnitude for an on-bin sinusoid (the window's coherent gain).
pub const HANN_PEAK_FACTOR: f64 = 0.5;

/// A resolvable beat must sit at least this many bins above DC.
pub const MIN_BEAT_BINS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakInterpolation {
    /// Frequency of the bin itself.
    #[default]
    Nearest,
    /// Three-bin refinement: complex-ratio estimator for the rectangular window,
    /// log-parabolic fit for Hann.
    ThreePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Angular frequency of bin `k`: `2 pi k / (N dt)`, from 0 to the Nyquist frequency.
    pub freqs: Vec<f64>,
    pub mags: Vec<f64>,
    /// Scaled complex bins, `mags[k] = |bins[k]|`.
    #[serde(skip)]
    pub bins: Vec<Complex64>,
    pub window: Window,
    pub detrended: bool,
    /// Always false: the transform is mixed-radix and handles any length.
    pub padded: bool,
    pub n_samples: usize,
    pub sample_interval: f64,
    /// Median magnitude over non-DC bins.
    pub background: f64,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        2.0 * PI / (self.n_samples as f64 * self.sample_interval)
    }

    /// Index of the bin nearest to `freq`, clamped to the spectrum.
    pub fn nearest_bin(&self, freq: f64) -> usize {
        let k = (freq / self.bin_width()).round().max(0.0) as usize;
        k.min(self.mags.len() - 1)
    }

    /// `sum x^2` reconstructed from the one-sided magnitudes.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.n_samples;
        let last = self.mags.len() - 1;
        let mut acc = self.mags[0].powi(2);
        for (k, m) in self.mags.iter().enumerate().skip(1) {
            if n % 2 == 0 && k == last {
                acc += m * m;
            } else {
                acc += 0.5 * m * m;
            }
        }
        n as f64 * acc
    }

    pub fn is_local_max(&self, k: usize) -> bool {
        if k == 0 || k >= self.mags.len() {
            return false;
        }
        let m = self.mags[k];
        let left = self.mags[k - 1];
        let right = self.mags.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        m >= left && m >= right && m > 0.0
    }

    pub fn quality(&self, k: usize) -> f64 {
        if self.background > 0.0 {
            self.mags[k] / self.background
        } else if self.mags[k] > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

fn window_weights(window: Window, n: usize) -> Vec<f64> {
    match window {
        Window::Rectangular => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
            .collect(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One-sided magnitude spectrum of a trace, optionally mean-removed before windowing.
pub fn compute_spectrum(trace: &ProbabilityTrace, window: Window, detrend: bool) -> Result<Spectrum> {
    let n = trace.len();
    ensure(n >= MIN_SAMPLES, || format!("spectrum needs at least {MIN_SAMPLES} samples, got {n}"))?;
    ensure(trace.sample_interval > 0.0, || "trace has no sampling interval".into())?;
    let mean = if detrend {
        crate::quadrature::neumaier_sum(trace.values.iter().copied()) / n as f64
    } else {
        0.0
    };
    let w = window_weights(window, n);
    let mut buf: Vec<Complex64> = trace
        .values
        .iter()
        .zip(&w)
        .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    let nf = n as f64;
    let bins: Vec<Complex64> = (0..=half)
        .map(|k| {
            let scale = if k == 0 || (n % 2 == 0 && k == half) { 1.0 / nf } else { 2.0 / nf };
            buf[k] * scale
        })
        .collect();
    let mags: Vec<f64> = bins.iter().map(|c| c.norm()).collect();
    let df = 2.0 * PI / (nf * trace.sample_interval);
    let freqs = (0..=half).map(|k| k as f64 * df).collect();
    let background = median(mags[1..].to_vec());
    Ok(Spectrum {
        freqs,
        mags,
        bins,
        window,
        detrended: detrend,
        padded: false,
        n_samples: n,
        sample_interval: trace.sample_interval,
        background,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub frequency: f64,
    pub magnitude: f64,
    /// Magnitude over the median background.
    pub quality: f64,
    pub bin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicLine {
    /// Multiple of the beat: 0.5 for the half-beat line, then 1, 2, ...
    pub order: f64,
    pub target: f64,
    pub bin: usize,
    pub frequency: f64,
    pub magnitude: f64,
    pub quality: f64,
    pub local_max: bool,
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub expected_beat: f64,
    pub background: f64,
    /// Local maxima sorted by magnitude, largest first.
    pub peaks: Vec<Peak>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub harmonics: Vec<HarmonicLine>,
}

impl PeakReport {
    pub fn harmonic(&self, order: f64) -> Option<&HarmonicLine> {
        self.harmonics.iter().find(|h| h.order == order)
    }
}

/// Up to `max_peaks` non-DC local maxima, strongest first.
pub fn find_peaks(spec: &Spectrum, expected_beat: f64, max_peaks: usize) -> PeakReport {
    let mut peaks: Vec<Peak> = (1..spec.mags.len())
        .filter(|&k| spec.is_local_max(k))
        .map(|k| Peak {
            frequency: spec.freqs[k],
            magnitude: spec.mags[k],
            quality: spec.quality(k),
            bin: k,
        })
        .collect();
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude).then(a.bin.cmp(&b.bin)));
    peaks.truncate(max_peaks);
    PeakReport {
        expected_beat,
        background: spec.background,
        peaks,
        harmonics: Vec::new(),
    }
}

/// Largest magnitude among the bin nearest `freq` and its two neighbours.
fn refine(spec: &Spectrum, freq: f64) -> usize {
    let k = spec.nearest_bin(freq);
    let lo = k.saturating_sub(1).max(1);
    let hi = (k + 1).min(spec.mags.len() - 1);
    (lo..=hi)
        .max_by(|&a, &b| spec.mags[a].total_cmp(&spec.mags[b]).then(b.cmp(&a)))
        .unwrap_or(k)
}

/// Magnitude and presence of the lines at `k * beat` (k = 1..=max_harmonic) and `beat / 2`.
pub fn detect_harmonics(spec: &Spectrum, beat: f64, max_harmonic: usize) -> Result<PeakReport> {
    ensure(beat.is_finite() && beat > 0.0, || "beat frequency must be positive".into())?;
    let bins = beat / spec.bin_width();
    ensure(bins >= MIN_BEAT_BINS, || {
        format!("beat {beat} spans only {bins:.2} bins; need at least {MIN_BEAT_BINS}")
    })?;
    let nyquist = *spec.freqs.last().unwrap();
    let mut orders = vec![0.5];
    orders.extend((1..=max_harmonic).map(|k| k as f64));
    let harmonics = orders
        .into_iter()
        .filter(|o| o * beat <= nyquist)
        .map(|order| {
            let target = order * beat;
            let bin = refine(spec, target);
            let local_max = spec.is_local_max(bin);
            let quality = spec.quality(bin);
            HarmonicLine {
                order,
                target,
                bin,
                frequency: spec.freqs[bin],
                magnitude: spec.mags[bin],
                quality,
                local_max,
                present: local_max && quality >= PRESENCE_QUALITY,
            }
        })
        .collect();
    let mut report = find_peaks(spec, beat, 16);
    report.harmonics = harmonics;
    Ok(report)
}

/// Beat-line magnitude of the averaged trace (rectangular window, mean removed).
pub fn beat_amplitude(traces: &[ProbabilityTrace], beat: f64) -> Result<f64> {
    ensure(!traces.is_empty(), || "need at least one trace".into())?;
    let avg = if traces.len() == 1 {
        traces[0].clone()
    } else {
        ProbabilityTrace::mean(traces)?
    };
    let spec = compute_spectrum(&avg, Window::Rectangular, true)?;
    Ok(spec.mags[refine(&spec, beat)])
}

/// Frequency estimate for the peak at bin `k`.
pub fn peak_frequency(spec: &Spectrum, k: usize, mode: PeakInterpolation) -> Result<f64> {
    if k >= spec.mags.len() {
        return Err(Error::invalid(format!("bin {k} is outside the spectrum")));
    }
    let at = |d: f64| (k as f64 + d) * spec.bin_width();
    if mode == PeakInterpolation::Nearest || k == 0 || k + 1 >= spec.mags.len() {
        return Ok(at(0.0));
    }
    let d = match spec.window {
        Window::Rectangular => {
            let (a, b, c) = (spec.bins[k - 1], spec.bins[k], spec.bins[k + 1]);
            let den = 2.0 * b - a - c;
            if den.norm() == 0.0 {
                0.0
            } else {
                ((a - c) / den).re
            }
        }
        Window::Hann => {
            let l = |m: f64| m.max(f64::MIN_POSITIVE).ln();
            let (a, b, c) = (l(spec.mags[k - 1]), l(spec.mags[k]), l(spec.mags[k + 1]));
            let den = 2.0 * (2.0 * b - a - c);
            if den == 0.0 {
                0.0
            } else {
                (c - a) / den
            }
        }
    };
    Ok(at(d.clamp(-1.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::RegimeFlags;
    use crate::trace::TimeGrid;

    fn trace_of<F: Fn(f64) -> f64>(n: usize, dt: f64, f: F) -> ProbabilityTrace {
        let grid = TimeGrid::shots(dt, n).unwrap();
        let v = grid.times().iter().map(|&t| f(t)).collect();
        ProbabilityTrace::new(&grid, v, RegimeFlags::empty()).unwrap()
    }

    #[test]
    fn constant_trace_detrended_is_flat() {
        let tr = trace_of(100, 0.1, |_| 0.37);
        let s = compute_spectrum(&tr, Window::Rectangular, true).unwrap();
        assert!(s.mags.iter().all(|m| *m < 1e-12));
        let raw = compute_spectrum(&tr, Window::Rectangular, false).unwrap();
        assert!((raw.mags[0] - 0.37).abs() < 1e-15);
    }

    #[test]
    fn on_bin_cosine_has_unit_normalisation() {
        let n = 1000;
        let dt = 0.01;
        let k0 = 37.0;
        let w = 2.0 * PI * k0 / (n as f64 * dt);
        let tr = trace_of(n, dt, |t| 0.5 + 0.25 * (w * t).cos());
        let s = compute_spectrum(&tr, Window::Rectangular, true).unwrap();
        let rep = find_peaks(&s, w, 4);
        assert_eq!(rep.peaks[0].bin, 37);
        assert!((rep.peaks[0].magnitude - 0.25).abs() < 1e-12);
        assert!(rep.peaks[0].quality > 100.0);
        let h = compute_spectrum(&tr, Window::Hann, true).unwrap();
        assert!((h.mags[37] / s.mags[37] - HANN_PEAK_FACTOR).abs() < 1e-12);
    }

    #[test]
    fn parseval_holds_for_odd_and_even_lengths() {
        for &n in &[101usize, 128] {
            let tr = trace_of(n, 0.3, |t| 0.5 + 0.3 * (1.7 * t).sin() * (0.2 * t).cos());
            let s = compute_spectrum(&tr, Window::Rectangular, true).unwrap();
            let mean = tr.values.iter().sum::<f64>() / n as f64;
            let e: f64 = tr.values.iter().map(|v| (v - mean).powi(2)).sum();
            assert!((s.parseval_energy() / e - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn short_trace_and_unresolvable_beat_are_rejected() {
        let tr = trace_of(8, 0.1, |_| 0.5);
        assert!(compute_spectrum(&tr, Window::Rectangular, true).is_err());
        let tr = trace_of(64, 0.1, |t| 0.5 + 0.1 * t.cos());
        let s = compute_spectrum(&tr, Window::Rectangular, true).unwrap();
        assert!(detect_harmonics(&s, s.bin_width() * 2.0, 3).is_err());
        assert!(detect_harmonics(&s, 0.0, 3).is_err());
    }

    #[test]
    fn pure_beat_has_no_harmonics() {
        let n = 4096;
        let dt = 0.05;
        let beat = 2.0 * PI * 40.0 / (n as f64 * dt);
        let tr = trace_of(n, dt, |t| 0.5 + 0.4 * (beat * t).cos());
        let s = compute_spectrum(&tr, Window::Rectangular, true).unwrap();
        let rep = detect_harmonics(&s, beat, 4).unwrap();
        let f = rep.harmonic(1.0).unwrap();
        assert!(f.present);
        for k in 2..=4 {
            assert!(rep.harmonic(k as f64).unwrap().magnitude < 0.01 * f.magnitude);
        }
    }

    #[test]
    fn off_bin_interpolation() {
        let n = 2048;
        let dt = 0.02;
        let df = 2.0 * PI / (n as f64 * dt);
        for &frac in &[0.0, 0.13, 0.37, 0.5, 0.71] {
            let w = (150.0 + frac) * df;
            let tr = trace_of(n, dt, |t| 0.5 + 0.3 * (w * t + 0.4).cos());
            for window in [Window::Rectangular, Window::Hann] {
                let s = compute_spectrum(&tr, window, true).unwrap();
                let k = find_peaks(&s, w, 1).peaks[0].bin;
                let near = peak_frequency(&s, k, PeakInterpolation::Nearest).unwrap();
                let fine = peak_frequency(&s, k, PeakInterpolation::ThreePoint).unwrap();
                assert!(((near - w) / df).abs() <= 1.0);
                assert!(((fine - w) / df).abs() <= 0.1, "{window:?} frac {frac}: {}", (fine - w) / df);
                if frac == 0.0 {
                    assert!(((near - w) / df).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn beat_amplitude_of_identical_traces() {
        let n = 1000;
        let dt = 0.01;
        let w = 2.0 * PI * 25.0 / (n as f64 * dt);
        let tr = trace_of(n, dt, |t| 0.5 + 0.2 * (w * t).cos());
        let a = beat_amplitude(&[tr.clone(), tr.clone(), tr], w).unwrap();
        assert!((a - 0.2).abs() < 1e-12);
        let other = trace_of(999, dt, |_| 0.5);
        let tr = trace_of(n, dt, |_| 0.5);
        assert!(beat_amplitude(&[tr, other], w).is_err());
    }
}
