//! Executes a resolved config and writes the artifact bundle.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::io::{read_trace_csv, write_columns, write_json};
use super::{prepare, ExperimentConfig, ExperimentKind, ResolvedConfig, SignalModel, Study};
use crate::error::{Error, Result};
use crate::fisher::{fisher_matrix_two_params, fit_scaling, Readout};
use crate::noise::{
    average_over_macroscopic_with_error, beat_amplitude_decay_prediction, default_sub_steps, ou_ensemble_trace,
    series_average_trace, static_ensemble_beat_amplitude, EnsembleSpec, NoiseModel, OuProcess,
};
use crate::quantum::{evolve_exact, multinucleus_readout, Basis, NucleusSpec, SpinEnsembleState};
use crate::seed::derive_seed;
use crate::signal::{
    hartmann_hahn_probability, sensor_probability, strong_coupling_probability, weak_coupling_probability,
    MicroNoise, ProtocolParams, RegimeFlags, WEAK_COUPLING_LIMIT,
};
use crate::spectral::{compute_spectrum, detect_harmonics, find_peaks, PeakReport, Spectrum};
use crate::trace::{ProbabilityTrace, TimeGrid};

const TIME: &str = "time [t.u.]";
const FREQ: &str = "angular_frequency [rad/t.u.]";

/// Everything recorded about one run; `config` reruns it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub kind: ExperimentKind,
    pub preset: Option<String>,
    pub config: ResolvedConfig,
    /// Union of regime flags raised while computing.
    pub flags: Vec<String>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
    pub results: Value,
}

#[derive(Debug, Clone)]
pub struct ArtifactBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, headers: &[String], columns: &[&[f64]]) -> Result<()> {
        write_columns(&self.dir.join(name), headers, columns)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Working state shared by the study runners.
struct Ctx {
    flags: RegimeFlags,
    warnings: Vec<String>,
}

/// Validate, run and write the bundle into `config.output.dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ArtifactBundle> {
    let r = prepare(config)?;
    run_resolved(&r)
}

fn run_resolved(r: &ResolvedConfig) -> Result<ArtifactBundle> {
    let dir = r.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut w = Writer {
        dir: &dir,
        files: Vec::new(),
    };
    let mut ctx = Ctx {
        flags: RegimeFlags::empty(),
        warnings: Vec::new(),
    };
    let results = match (&r.kind, &r.analysis.input) {
        (ExperimentKind::Fft, Some(input)) => run_fft_input(r, input, &mut w, &mut ctx)?,
        _ => match &r.study {
            Study::Trace { signal, ou_paths } => run_trace(r, *signal, *ou_paths, &mut w, &mut ctx)?,
            Study::AlphaSweep { alphas } => run_alpha(r, alphas, &mut w, &mut ctx)?,
            Study::OuDecay { ratios, paths } => run_ou(r, ratios, *paths, &mut w, &mut ctx)?,
            Study::XyReadout { sample_interval } => run_xy(r, *sample_interval, &mut w, &mut ctx)?,
            Study::FisherScaling { cases } => run_fisher(cases, &mut w)?,
            Study::Quantum { nuclei, exact } => run_quantum(r, nuclei, exact, &mut w, &mut ctx)?,
        },
    };
    let mut files = w.files.clone();
    files.push(r.output.summary_file.clone());
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: r.kind,
        preset: r.preset.clone(),
        config: r.clone(),
        flags: ctx.flags.names(),
        warnings: ctx.warnings,
        files: files.clone(),
        results,
    };
    w.json(&r.output.summary_file, &summary)?;
    Ok(ArtifactBundle {
        files: files.iter().map(|f| dir.join(f)).collect(),
        dir,
        summary,
    })
}

/// Probability model for a trace study.
fn model(signal: SignalModel) -> fn(f64, &ProtocolParams, &MicroNoise) -> f64 {
    match signal {
        SignalModel::Sensor => sensor_probability,
        SignalModel::Weak => |t, p, m| weak_coupling_probability(t, p, m).value,
        SignalModel::Strong => strong_coupling_probability,
        SignalModel::HartmannHahn => |t, p, _| hartmann_hahn_probability(t, p).value,
    }
}

/// Averaged trace for the protocol under the configured noise. Also returns the largest
/// Monte Carlo standard error, when sampling was used.
fn build_trace(
    r: &ResolvedConfig,
    p: &ProtocolParams,
    signal: SignalModel,
    ou_paths: usize,
) -> Result<(ProbabilityTrace, Option<f64>)> {
    let grid = TimeGrid::shots(p.tau, p.n_shots)?;
    let f = model(signal);
    match r.noise {
        NoiseModel::None => {
            let values = grid.times().par_iter().map(|&t| f(t, p, &r.micro)).collect();
            Ok((ProbabilityTrace::new(&grid, values, p.regime_flags(&r.micro))?, None))
        }
        NoiseModel::OrnsteinUhlenbeck {
            correlation_time,
            diffusion,
            seed,
        } => {
            let process = OuProcess::new(correlation_time, diffusion)?;
            let steps = default_sub_steps(p.tau, correlation_time);
            Ok((ou_ensemble_trace(&process, p, ou_paths, steps, seed)?, None))
        }
        _ => match (&r.ensemble, signal) {
            (None, SignalModel::Sensor) => Ok((series_average_trace(&grid, p, &r.micro, &r.noise)?, None)),
            (spec, _) => {
                let spec = spec.unwrap_or(EnsembleSpec::quadrature(64));
                let (trace, se) = average_over_macroscopic_with_error(f, &r.noise, &spec, &grid, p, &r.micro)?;
                let max_se = se.iter().cloned().fold(0.0, f64::max);
                Ok((trace, (max_se > 0.0).then_some(max_se)))
            }
        },
    }
}

/// Spectrum plus a peak report; harmonics are added when the beat is resolvable.
fn analyse(trace: &ProbabilityTrace, beat: f64, r: &ResolvedConfig, ctx: &mut Ctx) -> Result<(Spectrum, PeakReport)> {
    let a = &r.analysis;
    let spec = compute_spectrum(trace, a.window, a.detrend)?;
    let mut report = if beat.abs() > 0.0 {
        match detect_harmonics(&spec, beat.abs(), a.max_harmonic) {
            Ok(rep) => rep,
            Err(e) => {
                ctx.warnings.push(format!("harmonics skipped: {e}"));
                find_peaks(&spec, beat.abs(), a.max_peaks)
            }
        }
    } else {
        find_peaks(&spec, 0.0, a.max_peaks)
    };
    report.peaks.truncate(a.max_peaks);
    Ok((spec, report))
}

fn headers(first: &str, prefix: &str, labels: &[String], unit: &str) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(labels.iter().map(|l| format!("{prefix}{l} [{unit}]")))
        .collect()
}

fn write_traces(w: &mut Writer, r: &ResolvedConfig, labels: &[String], traces: &[&ProbabilityTrace]) -> Result<()> {
    let mut cols: Vec<&[f64]> = vec![&traces[0].times];
    cols.extend(traces.iter().map(|t| t.values.as_slice()));
    w.csv(&r.output.trace_file, &headers(TIME, "p_", labels, "prob"), &cols)
}

fn write_spectra(w: &mut Writer, r: &ResolvedConfig, labels: &[String], specs: &[&Spectrum]) -> Result<()> {
    let mut cols: Vec<&[f64]> = vec![&specs[0].freqs];
    cols.extend(specs.iter().map(|s| s.mags.as_slice()));
    w.csv(&r.output.spectrum_file, &headers(FREQ, "magnitude_", labels, "prob"), &cols)
}

fn dominant(report: &PeakReport) -> Value {
    report.peaks.first().map_or(Value::Null, |p| json!(p))
}

fn run_trace(r: &ResolvedConfig, signal: SignalModel, ou_paths: usize, w: &mut Writer, ctx: &mut Ctx) -> Result<Value> {
    let (trace, se) = build_trace(r, &r.protocol, signal, ou_paths)?;
    ctx.flags |= trace.flags;
    let (spec, report) = analyse(&trace, r.protocol.beat(), r, ctx)?;
    let label = vec!["mean".to_string()];
    if r.kind != ExperimentKind::Fft {
        write_traces(w, r, &label, &[&trace])?;
    }
    write_spectra(w, r, &label, &[&spec])?;
    w.json(&r.output.peaks_file, &report)?;
    Ok(json!({
        "n_samples": trace.len(),
        "beat": r.protocol.beat().abs(),
        "bin_width": spec.bin_width(),
        "background": spec.background,
        "dominant_peak": dominant(&report),
        "max_standard_error": se,
    }))
}

fn run_fft_input(r: &ResolvedConfig, input: &Path, w: &mut Writer, ctx: &mut Ctx) -> Result<Value> {
    let trace = read_trace_csv(input)?;
    let (spec, report) = analyse(&trace, r.protocol.beat(), r, ctx)?;
    write_spectra(w, r, &["input".to_string()], &[&spec])?;
    w.json(&r.output.peaks_file, &report)?;
    Ok(json!({
        "input": input,
        "n_samples": trace.len(),
        "bin_width": spec.bin_width(),
        "dominant_peak": dominant(&report),
    }))
}

#[derive(Debug, Clone, Serialize)]
struct AlphaRow {
    alpha: f64,
    half_beat_magnitude: f64,
    half_beat_quality: f64,
    beat_magnitude: f64,
    beat_quality: f64,
}

/// Least squares through the origin, with the centred coefficient of determination.
pub(crate) fn origin_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let slope = sxy / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    (slope, 1.0 - ss_res / ss_tot)
}

/// Ordinary least-squares slope of `ln y` against `ln x`.
pub(crate) fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn run_alpha(r: &ResolvedConfig, alphas: &[f64], w: &mut Writer, ctx: &mut Ctx) -> Result<Value> {
    let mut traces = Vec::new();
    let mut specs = Vec::new();
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &alpha in alphas {
        let p = ProtocolParams { alpha, ..r.protocol };
        let (trace, _) = build_trace(r, &p, SignalModel::Sensor, 1)?;
        ctx.flags |= trace.flags;
        let (spec, report) = analyse(&trace, p.beat(), r, ctx)?;
        let line = |order: f64| report.harmonic(order).map_or((0.0, 0.0), |h| (h.magnitude, h.quality));
        let (hm, hq) = line(0.5);
        let (bm, bq) = line(1.0);
        rows.push(AlphaRow {
            alpha,
            half_beat_magnitude: hm,
            half_beat_quality: hq,
            beat_magnitude: bm,
            beat_quality: bq,
        });
        traces.push(trace);
        specs.push(spec);
        reports.push(json!({ "alpha": alpha, "report": report }));
    }
    // Linear response is expected only while the amplified phase stays small.
    let gt = (r.protocol.g * r.protocol.tau).abs();
    let used: Vec<&AlphaRow> = rows
        .iter()
        .filter(|row| row.alpha > 0.0 && gt * row.alpha <= WEAK_COUPLING_LIMIT)
        .collect();
    let fit = if used.len() >= 2 {
        let x: Vec<f64> = used.iter().map(|r| r.alpha).collect();
        let y: Vec<f64> = used.iter().map(|r| r.half_beat_magnitude).collect();
        let (slope, r2) = origin_fit(&x, &y);
        json!({ "alphas": x, "slope": slope, "r_squared": r2 })
    } else {
        ctx.warnings.push("fewer than two weak-regime alphas; no linear fit".into());
        Value::Null
    };
    let labels: Vec<String> = alphas.iter().map(|a| format!("alpha={a}")).collect();
    if r.kind != ExperimentKind::Fft {
        write_traces(w, r, &labels, &traces.iter().collect::<Vec<_>>())?;
    }
    write_spectra(w, r, &labels, &specs.iter().collect::<Vec<_>>())?;
    w.json(&r.output.peaks_file, &reports)?;
    Ok(json!({ "rows": rows, "linear_fit": fit }))
}

#[derive(Debug, Clone, Serialize)]
struct OuRow {
    ratio: f64,
    correlation_time: f64,
    sigma: f64,
    ou_amplitude: f64,
    static_amplitude: f64,
    amplitude_ratio: f64,
    large_sigma_prediction: f64,
}

fn run_ou(r: &ResolvedConfig, ratios: &[f64], paths: usize, w: &mut Writer, ctx: &mut Ctx) -> Result<Value> {
    let NoiseModel::OrnsteinUhlenbeck { diffusion, seed, .. } = r.noise else {
        return Err(Error::invalid("ou_decay needs an ornstein_uhlenbeck noise model"));
    };
    let p = &r.protocol;
    let beat = p.beat().abs();
    let mut traces = Vec::new();
    let mut specs = Vec::new();
    let mut reports = BTreeMap::new();
    let mut rows = Vec::new();
    for (i, &ratio) in ratios.iter().enumerate() {
        let tau_t = ratio * p.tau;
        let process = OuProcess::new(tau_t, diffusion)?;
        let member_seed = derive_seed(seed, "ou-ratio", i as u64);
        let trace = ou_ensemble_trace(&process, p, paths, default_sub_steps(p.tau, tau_t), member_seed)?;
        ctx.flags |= trace.flags;
        let (spec, report) = analyse(&trace, beat, r, ctx)?;
        let ou_amp = report.harmonic(1.0).map_or(0.0, |h| h.magnitude);
        let sigma = process.stationary_variance().sqrt();
        let static_amp = static_ensemble_beat_amplitude(p.g, p.tau, p.delta1, p.delta2, sigma);
        let pred = beat_amplitude_decay_prediction(p.g, p.tau, sigma)?;
        ctx.flags |= pred.flags;
        rows.push(OuRow {
            ratio,
            correlation_time: tau_t,
            sigma,
            ou_amplitude: ou_amp,
            static_amplitude: static_amp,
            amplitude_ratio: ou_amp / static_amp,
            large_sigma_prediction: pred.value,
        });
        reports.insert(format!("{i:02}_ratio={ratio}"), report);
        traces.push(trace);
        specs.push(spec);
    }
    let x: Vec<f64> = rows.iter().map(|r| r.correlation_time).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.ou_amplitude).collect();
    let slope = if y.iter().all(|v| *v > 0.0) {
        Some(loglog_slope(&x, &y))
    } else {
        ctx.warnings.push("a beat amplitude is zero; no slope fit".into());
        None
    };
    let labels: Vec<String> = ratios.iter().map(|a| format!("ratio={a}")).collect();
    if r.kind != ExperimentKind::Fft {
        write_traces(w, r, &labels, &traces.iter().collect::<Vec<_>>())?;
    }
    write_spectra(w, r, &labels, &specs.iter().collect::<Vec<_>>())?;
    w.json(&r.output.peaks_file, &reports)?;
    Ok(json!({ "paths": paths, "rows": rows, "loglog_slope": slope }))
}

fn xy_trace(spec: &NucleusSpec, tau: f64, grid: &TimeGrid, basis: Basis) -> Result<ProbabilityTrace> {
    let mut flags = RegimeFlags::empty();
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        let v = multinucleus_readout(spec, tau, t, basis)?;
        flags |= v.flags;
        values.push(v.value);
    }
    ProbabilityTrace::new(grid, values, flags)
}

fn run_xy(r: &ResolvedConfig, dt: f64, w: &mut Writer, ctx: &mut Ctx) -> Result<Value> {
    let p = &r.protocol;
    let grid = TimeGrid::uniform(dt, dt, p.n_shots)?;
    let spec = NucleusSpec::new(vec![p.g, p.g], vec![p.delta1, p.delta2])?;
    let x = xy_trace(&spec, p.tau, &grid, Basis::X)?;
    let y = xy_trace(&spec, p.tau, &grid, Basis::Y)?;
    ctx.flags |= x.flags | y.flags;
    let (sx, rx) = analyse(&x, p.beat(), r, ctx)?;
    let sy = compute_spectrum(&y, r.analysis.window, r.analysis.detrend)?;
    let ry = find_peaks(&sy, p.beat().abs(), r.analysis.max_peaks);
    let labels = vec!["x".to_string(), "y".to_string()];
    if r.kind != ExperimentKind::Fft {
        write_traces(w, r, &labels, &[&x, &y])?;
    }
    write_spectra(w, r, &labels, &[&sx, &sy])?;
    w.json(&r.output.peaks_file, &json!({ "x": rx, "y": ry }))?;
    let beat_line = rx.harmonic(1.0).cloned();
    Ok(json!({
        "sample_interval": dt,
        "beat": p.beat().abs(),
        "x_beat_line": beat_line,
        "x_dominant_peak": dominant(&rx),
        "y_dominant_peak": dominant(&ry),
    }))
}

fn run_fisher(cases: &[super::FisherCase], w: &mut Writer) -> Result<Value> {
    let mut out = Vec::new();
    for case in cases {
        let s = &case.scenario;
        let fit = fit_scaling(s, &case.n_values, &case.tau_values)?;
        let n_max = *case.n_values.iter().max().unwrap();
        // With equal amplitudes the omega_s average leaves the small-coupling prefactor unchanged.
        let weak_prefactor = (s.readout == Readout::SensingX && (!s.noisy_omega_s || s.g1 == s.g2))
            .then(|| (s.g1 * s.g1 + s.g2 * s.g2) / 6.0);
        let matrix = fisher_matrix_two_params(s.g1, s.g2, s.tau, n_max).ok();
        out.push(json!({
            "label": case.label,
            "scenario": s,
            "fit": fit,
            "weak_coupling_prefactor": weak_prefactor,
            "two_parameter_matrix": matrix,
        }));
    }
    let value = json!({ "cases": out });
    w.json("fisher.json", &value)?;
    Ok(value)
}

fn run_quantum(
    r: &ResolvedConfig,
    nuclei: &NucleusSpec,
    exact: &crate::quantum::ExactProtocol,
    w: &mut Writer,
    ctx: &mut Ctx,
) -> Result<Value> {
    let state = SpinEnsembleState::polarized(nuclei.len())?;
    let tr = evolve_exact(&state, nuclei, exact)?;
    let grid = TimeGrid::from_times(tr.times.clone())?;
    let trace = ProbabilityTrace::new(&grid, tr.probabilities.clone(), RegimeFlags::empty())?;
    let beat = if nuclei.len() == 2 {
        nuclei.larmor[0] - nuclei.larmor[1]
    } else {
        0.0
    };
    let (spec, report) = analyse(&trace, beat, r, ctx)?;
    let headers: Vec<String> = [
        TIME,
        "probability [prob]",
        "sensor_purity [1]",
        "nuclear_purity [1]",
        "polarization [1]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    w.csv(
        &r.output.trace_file,
        &headers,
        &[&tr.times, &tr.probabilities, &tr.sensor_purity, &tr.nuclear_purity, &tr.polarization],
    )?;
    write_spectra(w, r, &["probability".to_string()], &[&spec])?;
    w.json(&r.output.peaks_file, &report)?;
    let min_purity = tr.sensor_purity.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(json!({
        "shots": exact.shots,
        "min_sensor_purity": min_purity,
        "final_nuclear_purity": tr.nuclear_purity.last(),
        "initial_polarization": tr.polarization.first(),
        "final_polarization": tr.polarization.last(),
        "dominant_peak": dominant(&report),
    }))
}
