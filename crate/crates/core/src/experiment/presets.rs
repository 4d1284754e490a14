//! Named parameter sets for the published figures.

use std::f64::consts::PI;

use super::{AnalysisOptions, ExperimentKind, FisherCase, OutputOptions, ResolvedConfig, Study};
use crate::error::{Error, Result};
use crate::fisher::{FisherScenario, Readout};
use crate::noise::NoiseModel;
use crate::quantum::{Basis, ExactProtocol, NucleusSpec, ResetMode, TwoSpinHamiltonian};
use crate::signal::{MicroNoise, ProtocolParams};

pub const PRESETS: [&str; 6] = [
    "fig3_weak",
    "fig3_strong",
    "fig4_amplification",
    "si_ou_decay",
    "si_xy_readout",
    "fisher_scaling",
];

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (step * i as f64).exp()).collect()
}

fn base(kind: ExperimentKind, name: &str, protocol: ProtocolParams, noise: NoiseModel, study: Study) -> ResolvedConfig {
    ResolvedConfig {
        kind,
        preset: Some(name.to_string()),
        protocol,
        micro: MicroNoise::default(),
        noise,
        ensemble: None,
        study,
        analysis: AnalysisOptions::default(),
        output: OutputOptions::default(),
        seed: 0,
    }
}

fn fig3(kind: ExperimentKind, name: &str, g: f64) -> ResolvedConfig {
    let protocol = ProtocolParams {
        g,
        tau: 5e-3,
        delta1: 100.0,
        delta2: 100.01,
        phi_m: 0.0,
        alpha: 0.0,
        n_shots: 1_000_000,
    };
    let mut c = base(
        kind,
        name,
        protocol,
        NoiseModel::GaussianMacroscopic { sigma: 1.0 },
        Study::default(),
    );
    c.micro = MicroNoise::new(1e-6, 0.0);
    c
}

/// Two nuclei in microsecond units: lines at 0.71 and 0.71126 MHz, 1 kHz coupling.
fn xy_params() -> ProtocolParams {
    let delta1 = 2.0 * PI * 0.71;
    ProtocolParams {
        g: 2.0 * PI * 1e-3,
        tau: 8.0 * PI / delta1,
        delta1,
        delta2: 2.0 * PI * 0.71126,
        phi_m: 0.0,
        alpha: 0.0,
        n_shots: 32_000,
    }
}

const XY_SAMPLE_INTERVAL: f64 = 0.25;

fn fisher_cases() -> Vec<FisherCase> {
    let weak_tau = geomspace(1e-3, 1e-2, 5);
    let strong_tau = geomspace(10.0, 100.0, 5);
    vec![
        FisherCase {
            label: "weak".into(),
            scenario: FisherScenario {
                readout: Readout::SensingX,
                g1: 1.0,
                g2: 1.0,
                tau: 1e-2,
                omega_s: 100.0,
                omega_r: 0.4 / 1e-2,
                noisy_omega_s: true,
                delta_width: 0.0,
            },
            n_values: vec![1000, 2000, 5000, 10_000],
            tau_values: weak_tau,
        },
        FisherCase {
            label: "strong_noisy".into(),
            scenario: FisherScenario {
                readout: Readout::SensingX,
                g1: 1.0,
                g2: 1.0,
                tau: 10.0,
                omega_s: 100.0,
                omega_r: 0.4 / 100.0,
                noisy_omega_s: true,
                delta_width: 0.0,
            },
            n_values: vec![1000, 2000, 5000, 10_000],
            tau_values: strong_tau,
        },
    ]
}

fn unsupported(name: &str, kind: ExperimentKind, allowed: &[ExperimentKind]) -> Error {
    let list: Vec<&str> = allowed.iter().map(|k| k.name()).collect();
    Error::invalid(format!(
        "preset {name} does not run under `{}`; use {}",
        kind.name(),
        list.join(" or ")
    ))
}

/// Resolved config for a named preset under the given experiment kind.
pub fn preset(name: &str, kind: ExperimentKind) -> Result<ResolvedConfig> {
    use ExperimentKind::*;
    let trace_kinds = [Simulate, Fft];
    let c = match name {
        "fig3_weak" | "fig3_strong" | "fig4_amplification" | "si_ou_decay" if !trace_kinds.contains(&kind) => {
            return Err(unsupported(name, kind, &trace_kinds));
        }
        "fig3_weak" => fig3(kind, name, 1.0),
        "fig3_strong" => fig3(kind, name, 1e3),
        "fig4_amplification" => base(
            kind,
            name,
            ProtocolParams {
                g: 1.0,
                tau: 5e-3,
                delta1: 100.0,
                delta2: 99.0,
                phi_m: 0.0,
                alpha: 0.0,
                n_shots: 10_000,
            },
            NoiseModel::GaussianMacroscopic { sigma: 0.1 },
            Study::AlphaSweep {
                alphas: vec![0.0, 1.0, 2.0, 4.0, 8.0, 2000.0],
            },
        ),
        "si_ou_decay" => {
            let tau = 5e-3;
            base(
                kind,
                name,
                ProtocolParams {
                    g: 1e-2,
                    tau,
                    delta1: 100.0,
                    delta2: 99.0,
                    phi_m: 0.0,
                    alpha: 0.0,
                    n_shots: 10_000,
                },
                NoiseModel::OrnsteinUhlenbeck {
                    correlation_time: tau,
                    diffusion: 1e5,
                    seed: 0,
                },
                Study::OuDecay {
                    ratios: geomspace(0.1, 100.0, 7),
                    paths: 200,
                },
            )
        }
        "si_xy_readout" => match kind {
            Simulate | Fft => base(
                kind,
                name,
                xy_params(),
                NoiseModel::None,
                Study::XyReadout {
                    sample_interval: XY_SAMPLE_INTERVAL,
                },
            ),
            Quantum => {
                let p = xy_params();
                let mut c = base(kind, name, p, NoiseModel::None, Study::default());
                c.study = Study::Quantum {
                    nuclei: NucleusSpec::new(vec![1.0, 1.0], vec![p.delta1, p.delta2])?,
                    exact: ExactProtocol {
                        hamiltonian: TwoSpinHamiltonian::Sensing,
                        g_global: p.g,
                        tau: p.tau,
                        sample_interval: XY_SAMPLE_INTERVAL,
                        shots: p.n_shots,
                        readout: Basis::X,
                        reset: ResetMode::Deterministic,
                        frequency_shifts: None,
                        coevolve: false,
                    },
                };
                c
            }
            Fisher => return Err(unsupported(name, kind, &[Simulate, Fft, Quantum])),
        },
        "fisher_scaling" => {
            if kind != Fisher {
                return Err(unsupported(name, kind, &[Fisher]));
            }
            base(
                kind,
                name,
                ProtocolParams {
                    g: 1.0,
                    tau: 1e-2,
                    ..ProtocolParams::default()
                },
                NoiseModel::None,
                Study::FisherScaling { cases: fisher_cases() },
            )
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown preset `{other}`; available presets: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::SignalModel;

    #[test]
    fn every_preset_resolves_somewhere() {
        for name in PRESETS {
            let ok = [
                ExperimentKind::Simulate,
                ExperimentKind::Fisher,
                ExperimentKind::Quantum,
            ]
            .iter()
            .any(|&k| preset(name, k).is_ok());
            assert!(ok, "{name}");
        }
    }

    #[test]
    fn fig3_presets_differ_only_in_coupling() {
        let w = preset("fig3_weak", ExperimentKind::Simulate).unwrap();
        let s = preset("fig3_strong", ExperimentKind::Simulate).unwrap();
        assert_eq!(s.protocol.g, 1e3 * w.protocol.g);
        assert_eq!(
            ProtocolParams { g: 1.0, ..s.protocol },
            w.protocol
        );
        assert!(matches!(w.study, Study::Trace { signal: SignalModel::Sensor, .. }));
    }

    #[test]
    fn geomspace_hits_endpoints() {
        let v = geomspace(0.1, 100.0, 7);
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[6] - 100.0).abs() < 1e-12);
    }
}
