//! Config-driven experiment runner: named presets, override merging, validation, and the
//! artifact bundle (trace CSV, spectrum CSV, peaks JSON, summary JSON).
//!
//! A config is a single JSON document. Every field is optional; missing fields come from the
//! preset (when one is named) or from defaults for the experiment kind. Explicit fields are
//! merged leaf by leaf over the preset and each changed leaf is logged as a warning.
//! Component seeds (Monte Carlo ensembles, OU paths, stochastic resets) are always derived from
//! the master `seed`, so the resolved config written to the summary reruns bit-identically.

mod io;
mod presets;
mod run;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fisher::FisherScenario;
use crate::noise::{EnsembleMethod, EnsembleSpec, NoiseModel};
use crate::quantum::{ExactProtocol, NucleusSpec, ResetMode};
use crate::seed::derive_seed;
use crate::signal::{MicroNoise, ProtocolParams, RegimeFlags};
use crate::spectral::Window;

pub use io::read_trace_csv;
pub use presets::PRESETS;
pub use run::{run_experiment, ArtifactBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Simulate,
    Fft,
    Fisher,
    Quantum,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Fft => "fft",
            ExperimentKind::Fisher => "fisher",
            ExperimentKind::Quantum => "quantum",
        }
    }
}

/// Which probability model a trace study evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalModel {
    /// `sin^2(phi + phi_m / 2)` with the midpoint phase.
    #[default]
    Sensor,
    Weak,
    Strong,
    HartmannHahn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherCase {
    pub label: String,
    pub scenario: FisherScenario,
    pub n_values: Vec<usize>,
    pub tau_values: Vec<f64>,
}

/// What the runner computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Study {
    /// One averaged trace and its spectrum.
    Trace {
        #[serde(default)]
        signal: SignalModel,
        /// Number of OU realisations when the noise is time dependent.
        #[serde(default = "default_ou_paths")]
        ou_paths: usize,
    },
    /// Macroscopically averaged sensor trace for each amplification strength.
    AlphaSweep { alphas: Vec<f64> },
    /// OU beat amplitude against correlation time, with the static ensemble of equal variance.
    OuDecay {
        /// `tau_t / tau` values.
        ratios: Vec<f64>,
        paths: usize,
    },
    /// Collective-phase two-nucleus signal read out along X and Y.
    XyReadout { sample_interval: f64 },
    /// Fisher-information scaling fits.
    FisherScaling { cases: Vec<FisherCase> },
    /// Exact few-spin evolution with measurement back-action.
    Quantum {
        nuclei: NucleusSpec,
        exact: ExactProtocol,
    },
}

fn default_ou_paths() -> usize {
    200
}

impl Default for Study {
    fn default() -> Self {
        Study::Trace {
            signal: SignalModel::Sensor,
            ou_paths: default_ou_paths(),
        }
    }
}

impl Study {
    fn name(&self) -> &'static str {
        match self {
            Study::Trace { .. } => "trace",
            Study::AlphaSweep { .. } => "alpha_sweep",
            Study::OuDecay { .. } => "ou_decay",
            Study::XyReadout { .. } => "xy_readout",
            Study::FisherScaling { .. } => "fisher_scaling",
            Study::Quantum { .. } => "quantum",
        }
    }

    fn allowed_under(&self, kind: ExperimentKind) -> bool {
        match self {
            Study::FisherScaling { .. } => kind == ExperimentKind::Fisher,
            Study::Quantum { .. } => kind == ExperimentKind::Quantum,
            _ => matches!(kind, ExperimentKind::Simulate | ExperimentKind::Fft),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    #[serde(default)]
    pub window: Window,
    #[serde(default = "yes")]
    pub detrend: bool,
    #[serde(default = "default_harmonics")]
    pub max_harmonic: usize,
    #[serde(default = "default_peaks")]
    pub max_peaks: usize,
    /// Trace CSV to analyse instead of simulating (`fft` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

fn yes() -> bool {
    true
}
fn default_harmonics() -> usize {
    4
}
fn default_peaks() -> usize {
    8
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            window: Window::Rectangular,
            detrend: true,
            max_harmonic: default_harmonics(),
            max_peaks: default_peaks(),
            input: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_trace_file")]
    pub trace_file: String,
    #[serde(default = "default_spectrum_file")]
    pub spectrum_file: String,
    #[serde(default = "default_peaks_file")]
    pub peaks_file: String,
    #[serde(default = "default_summary_file")]
    pub summary_file: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_trace_file() -> String {
    "trace.csv".into()
}
fn default_spectrum_file() -> String {
    "spectrum.csv".into()
}
fn default_peaks_file() -> String {
    "peaks.json".into()
}
fn default_summary_file() -> String {
    "summary.json".into()
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            trace_file: default_trace_file(),
            spectrum_file: default_spectrum_file(),
            peaks_file: default_peaks_file(),
            summary_file: default_summary_file(),
        }
    }
}

/// User-facing config; any field may be omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Value>,
    /// Without an ensemble, static noise on the sensor signal uses the exact series average.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Fully specified config as run; serializes to a valid [`ExperimentConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub protocol: ProtocolParams,
    pub micro: MicroNoise,
    pub noise: NoiseModel,
    pub ensemble: Option<EnsembleSpec>,
    pub study: Study,
    pub analysis: AnalysisOptions,
    pub output: OutputOptions,
    pub seed: u64,
}

impl ResolvedConfig {
    /// Back to the user-facing form, every field present.
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        Ok(serde_json::from_value(serde_json::to_value(self)?)?)
    }

    fn defaults(kind: ExperimentKind) -> Self {
        Self {
            kind,
            preset: None,
            protocol: ProtocolParams::default(),
            micro: MicroNoise::default(),
            noise: NoiseModel::None,
            ensemble: None,
            study: Study::default(),
            analysis: AnalysisOptions::default(),
            output: OutputOptions::default(),
            seed: 0,
        }
    }

    /// Replace component seeds by ones derived from the master seed.
    fn derive_seeds(&mut self) {
        let master = self.seed;
        if let NoiseModel::OrnsteinUhlenbeck { seed, .. } = &mut self.noise {
            *seed = derive_seed(master, "noise", 0);
        }
        if let Some(EnsembleSpec {
            method: EnsembleMethod::MonteCarlo { seed, .. },
            ..
        }) = &mut self.ensemble
        {
            *seed = derive_seed(master, "ensemble", 0);
        }
        if let Study::Quantum { exact, .. } = &mut self.study {
            if let ResetMode::Stochastic { seed } = &mut exact.reset {
                *seed = derive_seed(master, "readout", 0);
            }
        }
    }
}

/// Result of [`validate_config`]: hard errors and regime warnings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    /// Fields where the config overrode its preset.
    pub overrides: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Merge `over` into `base`, recording every changed leaf. Objects with different `kind`
/// tags are replaced whole.
fn merge(base: &mut Value, over: &Value, path: &str, changed: &mut Vec<String>) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if b.get("kind") == o.get("kind") || o.get("kind").is_none() => {
            for (k, v) in o {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v, &sub, changed),
                    None => {
                        changed.push(sub);
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => {
            if b != o {
                changed.push(path.to_string());
                *b = o.clone();
            }
        }
    }
}

/// Resolve presets and defaults into a concrete config. Returns the overridden field paths.
pub fn resolve(config: &ExperimentConfig) -> Result<(ResolvedConfig, Vec<String>)> {
    let kind = config.kind.unwrap_or_default();
    let base = match &config.preset {
        Some(name) => presets::preset(name, kind)?,
        None => ResolvedConfig::defaults(kind),
    };
    let mut merged = serde_json::to_value(&base)?;
    let mut explicit = serde_json::to_value(config)?;
    if let Value::Object(map) = &mut explicit {
        map.remove("kind");
        map.remove("preset");
    }
    let mut changed = Vec::new();
    merge(&mut merged, &explicit, "", &mut changed);
    let mut resolved: ResolvedConfig =
        serde_json::from_value(merged).map_err(|e| Error::invalid(format!("config does not parse: {e}")))?;
    resolved.kind = kind;
    resolved.derive_seeds();
    // Seeds are derived, so a differing explicit component seed is not an override.
    changed.retain(|p| !p.ends_with(".seed") || p == "seed");
    if config.preset.is_some() {
        let physics = ["protocol", "micro", "noise", "ensemble", "study"];
        for p in changed.iter().filter(|p| physics.iter().any(|f| p.split('.').next() == Some(f))) {
            log::warn!("`{p}` overrides preset {}", config.preset.as_deref().unwrap_or_default());
        }
    }
    Ok((resolved, changed))
}

/// List violated invariants and regime warnings without running anything.
pub fn validate_config(config: &ExperimentConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (r, overrides) = match resolve(config) {
        Ok(v) => v,
        Err(e) => {
            report.errors.push(message(&e));
            return report;
        }
    };
    report.overrides = overrides;
    check_resolved(&r, &mut report);
    report
}

fn message(e: &Error) -> String {
    match e {
        Error::InvalidInput(m) => m.clone(),
        other => other.to_string(),
    }
}

fn check_resolved(r: &ResolvedConfig, report: &mut ValidationReport) {
    let mut push = |res: Result<()>| {
        if let Err(e) = res {
            report.errors.push(message(&e));
        }
    };
    push(r.protocol.validate());
    push(r.micro.validate());
    push(r.noise.validate());
    if let Some(e) = &r.ensemble {
        push(e.validate());
    }
    if !r.study.allowed_under(r.kind) {
        report.errors.push(format!(
            "study `{}` cannot run under `{}`",
            r.study.name(),
            r.kind.name()
        ));
    }
    if r.analysis.input.is_some() && r.kind != ExperimentKind::Fft {
        report.errors.push("analysis.input is only read by `fft`".into());
    }
    let is_ou = matches!(r.noise, NoiseModel::OrnsteinUhlenbeck { .. });
    match &r.study {
        Study::Trace { signal, ou_paths } => {
            if is_ou && *signal != SignalModel::Sensor {
                report.errors.push("time-dependent noise is only supported for the sensor signal".into());
            }
            if is_ou && *ou_paths == 0 {
                report.errors.push("ou_paths must be at least 1".into());
            }
            if *signal == SignalModel::Weak && r.protocol.regime_flags(&r.micro).contains(RegimeFlags::COUPLING_NOT_WEAK) {
                report.warnings.push(format!(
                    "weak-coupling analysis requested but g tau = {} exceeds the weak-coupling limit",
                    r.protocol.g * r.protocol.tau
                ));
            }
        }
        Study::AlphaSweep { alphas } => {
            if alphas.is_empty() || alphas.iter().any(|a| !a.is_finite()) {
                report.errors.push("alphas must be a non-empty list of finite values".into());
            }
            if is_ou {
                report.errors.push("alpha sweep needs static noise".into());
            }
        }
        Study::OuDecay { ratios, paths } => {
            if !is_ou {
                report.errors.push("ou_decay needs an ornstein_uhlenbeck noise model".into());
            }
            if ratios.len() < 2 || ratios.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                report.errors.push("ratios must hold at least two positive values".into());
            }
            if *paths == 0 {
                report.errors.push("paths must be at least 1".into());
            }
        }
        Study::XyReadout { sample_interval } => {
            if !(sample_interval.is_finite() && *sample_interval > 0.0) {
                report.errors.push("sample_interval must be positive".into());
            }
        }
        Study::FisherScaling { cases } => {
            if cases.is_empty() {
                report.errors.push("fisher_scaling needs at least one case".into());
            }
            for c in cases {
                if let Err(e) = c.scenario.validate() {
                    report.errors.push(format!("case {}: {}", c.label, message(&e)));
                }
            }
        }
        Study::Quantum { nuclei, exact } => {
            push_all(report, nuclei.validate());
            if exact.shots < 16 {
                report.errors.push("quantum runs need at least 16 shots for a spectrum".into());
            }
        }
    }
    let flags = r.protocol.regime_flags(&r.micro);
    if flags.contains(RegimeFlags::COUPLING_NOT_WEAK) {
        report.warnings.push(format!(
            "coupling_not_weak: 2 g tau = {} exceeds {}",
            2.0 * r.protocol.g * r.protocol.tau,
            crate::signal::WEAK_COUPLING_LIMIT
        ));
    }
    if flags.contains(RegimeFlags::INTERACTION_TOO_LONG) {
        report.warnings.push("interaction_too_long: tau times the largest frequency reaches pi".into());
    }
    let width = r.noise.macroscopic_width();
    if width > 0.0 && RegimeFlags::for_macro_average(width, r.protocol.tau).contains(RegimeFlags::MACRO_NOT_AVERAGED) {
        report
            .warnings
            .push("macro_not_averaged: early shots fall inside the macroscopic averaging time".into());
    }
}

fn push_all(report: &mut ValidationReport, res: Result<()>) {
    if let Err(e) = res {
        report.errors.push(message(&e));
    }
}

/// Resolve and validate; invalid configs become [`Error::InvalidInput`].
pub fn prepare(config: &ExperimentConfig) -> Result<ResolvedConfig> {
    let (r, _) = resolve(config)?;
    let mut report = ValidationReport::default();
    check_resolved(&r, &mut report);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if !report.is_ok() {
        return Err(Error::invalid(report.errors.join("; ")));
    }
    Ok(r)
}
