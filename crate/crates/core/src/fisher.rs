//! Fisher information about the line splitting `omega_r` from the Bernoulli readout record.
//!
//! Each shot at `t_n = n tau` contributes `(dP/d omega_r)^2 / (P (1 - P))`. Every readout
//! model here has the form `P = F(u)` with a scalar `u(t)`, and the per-shot quotient is
//! written in a cancelled form `r(u) (du/d omega_r)^2`, so shots where `P` touches 0 or 1
//! contribute their continuous limit instead of `0/0`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::error::{ensure, Error, Result};
use crate::quadrature::{adaptive_gk, neumaier_sum};
use crate::signal::{sinc, ProtocolParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Sensing Hamiltonian, readout along the preparation axis.
    SensingX,
    /// Sensing Hamiltonian, orthogonal readout.
    SensingY,
    /// Flip-flop Hamiltonian, initialised and read out along z.
    HartmannHahnZ,
    /// Collective-phase multi-nucleus signal, x readout.
    MultiNucleusX,
    /// Collective-phase multi-nucleus signal, y readout.
    MultiNucleusY,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherScenario {
    pub readout: Readout,
    pub g1: f64,
    pub g2: f64,
    pub tau: f64,
    /// Mean line frequency `(omega_1 + omega_2) / 2`.
    pub omega_s: f64,
    /// Line splitting `omega_1 - omega_2 >= 0`.
    pub omega_r: f64,
    /// When set, `omega_s` is averaged over a macroscopic spread (phase-insensitive forms).
    pub noisy_omega_s: bool,
    /// Microscopic spread; scales the phase by `sinc(Delta t)`.
    #[serde(default)]
    pub delta_width: f64,
}

impl FisherScenario {
    pub fn from_params(readout: Readout, p: &ProtocolParams, noisy_omega_s: bool) -> Self {
        Self {
            readout,
            g1: p.g,
            g2: p.g,
            tau: p.tau,
            omega_s: p.mean_frequency(),
            omega_r: p.beat().abs(),
            noisy_omega_s,
            delta_width: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.g1 >= 0.0 && self.g2 >= 0.0, || "amplitudes must be non-negative".into())?;
        ensure(self.omega_r >= 0.0, || "omega_r must be non-negative".into())?;
        ensure(self.tau > 0.0, || "tau must be positive".into())?;
        ensure(self.delta_width >= 0.0, || "delta_width must be non-negative".into())?;
        for v in [self.g1, self.g2, self.tau, self.omega_s, self.omega_r, self.delta_width] {
            ensure(v.is_finite(), || "scenario values must be finite".into())?;
        }
        Ok(())
    }

    pub fn with_omega_r(&self, omega_r: f64) -> Self {
        Self { omega_r, ..*self }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..*self }
    }

    fn omegas(&self) -> (f64, f64) {
        (self.omega_s + 0.5 * self.omega_r, self.omega_s - 0.5 * self.omega_r)
    }

    /// Closed form used for this readout and noise setting.
    fn model(&self) -> Model {
        match (self.readout, self.noisy_omega_s) {
            (Readout::HartmannHahnZ, _) => Model::FlipFlop,
            (Readout::SensingX | Readout::MultiNucleusX, true) => Model::Bessel,
            (Readout::SensingY | Readout::MultiNucleusY, true) => Model::Flat,
            (Readout::SensingX, false) => Model::SinPhase { shift: 0.0 },
            (Readout::SensingY, false) => Model::SinPhase { shift: PI / 4.0 },
            (Readout::MultiNucleusX, false) => Model::CosPhase { shift: 0.0 },
            (Readout::MultiNucleusY, false) => Model::CosPhase { shift: -PI / 4.0 },
        }
    }

    /// `S = g1^2 + g2^2 + 2 g1 g2 cos(omega_r t)` and `d sqrt(S) / d omega_r`.
    fn envelope(&self, t: f64) -> (f64, f64) {
        let x = 0.5 * self.omega_r * t;
        let (g1, g2) = (self.g1, self.g2);
        let s = (g1 - g2).powi(2) + 4.0 * g1 * g2 * x.cos().powi(2);
        let root = s.max(0.0).sqrt();
        let d = if root > 1e-300 {
            -2.0 * g1 * g2 * t * x.cos() * x.sin() / root
        } else {
            // g1 = g2 at a node of cos(x): one-sided slope, squared later.
            -g1 * t * x.sin()
        };
        (root, d)
    }

    /// Readout probability at shot time `t`.
    pub fn probability(&self, t: f64) -> f64 {
        let a = self.tau * sinc(self.delta_width * t);
        match self.model() {
            Model::Flat => 0.5,
            Model::Bessel => {
                let (root, _) = self.envelope(t);
                let u = 2.0 * a * root;
                let v = 0.5 * (1.0 - bessel::j0(u));
                if self.readout == Readout::MultiNucleusX {
                    1.0 - v
                } else {
                    v
                }
            }
            Model::FlipFlop => {
                let (root, _) = self.envelope(t);
                (a * root / std::f64::consts::SQRT_2).sin().powi(2)
            }
            Model::SinPhase { shift } => {
                let (w1, w2) = self.omegas();
                let phi = a * (self.g1 * (w1 * t).sin() + self.g2 * (w2 * t).sin());
                (phi + shift).sin().powi(2)
            }
            Model::CosPhase { shift } => {
                let (w1, w2) = self.omegas();
                let phi = a * (self.g1 * (w1 * t).cos() + self.g2 * (w2 * t).cos());
                (phi + shift).cos().powi(2)
            }
        }
    }

    /// Analytic `dP / d omega_r` at shot time `t`.
    pub fn probability_derivative(&self, t: f64) -> f64 {
        let a = self.tau * sinc(self.delta_width * t);
        let (w1, w2) = self.omegas();
        match self.model() {
            Model::Flat => 0.0,
            Model::Bessel => {
                let (root, droot) = self.envelope(t);
                let d = 0.5 * bessel::j1(2.0 * a * root) * 2.0 * a * droot;
                if self.readout == Readout::MultiNucleusX {
                    -d
                } else {
                    d
                }
            }
            Model::FlipFlop => {
                let (root, droot) = self.envelope(t);
                let v = a * root / std::f64::consts::SQRT_2;
                (2.0 * v).sin() * a * droot / std::f64::consts::SQRT_2
            }
            Model::SinPhase { shift } => {
                let phi = a * (self.g1 * (w1 * t).sin() + self.g2 * (w2 * t).sin());
                let dphi = a * 0.5 * t * (self.g1 * (w1 * t).cos() - self.g2 * (w2 * t).cos());
                (2.0 * (phi + shift)).sin() * dphi
            }
            Model::CosPhase { shift } => {
                let phi = a * (self.g1 * (w1 * t).cos() + self.g2 * (w2 * t).cos());
                let dphi = a * 0.5 * t * (-self.g1 * (w1 * t).sin() + self.g2 * (w2 * t).sin());
                -(2.0 * (phi + shift)).sin() * dphi
            }
        }
    }

    /// Per-shot Fisher information and whether `P(1 - P)` vanished there.
    pub fn shot_information(&self, t: f64) -> (f64, bool) {
        let p = self.probability(t);
        (self.shot_term(t), p <= 0.0 || p >= 1.0)
    }

    fn shot_term(&self, t: f64) -> f64 {
        let a = self.tau * sinc(self.delta_width * t);
        let (w1, w2) = self.omegas();
        match self.model() {
            Model::Flat => 0.0,
            Model::Bessel => {
                let (root, droot) = self.envelope(t);
                let du = 2.0 * a * droot;
                bessel_ratio(2.0 * a * root) * du * du
            }
            Model::FlipFlop => {
                let (_, droot) = self.envelope(t);
                let dv = a * droot / std::f64::consts::SQRT_2;
                4.0 * dv * dv
            }
            Model::SinPhase { .. } => {
                let dphi = a * 0.5 * t * (self.g1 * (w1 * t).cos() - self.g2 * (w2 * t).cos());
                4.0 * dphi * dphi
            }
            Model::CosPhase { .. } => {
                let dphi = a * 0.5 * t * (-self.g1 * (w1 * t).sin() + self.g2 * (w2 * t).sin());
                4.0 * dphi * dphi
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Model {
    Flat,
    Bessel,
    FlipFlop,
    SinPhase { shift: f64 },
    CosPhase { shift: f64 },
}

/// `J1(u)^2 / (1 - J0(u)^2)`, equal to 1/2 at `u = 0`.
fn bessel_ratio(u: f64) -> f64 {
    if u == 0.0 {
        return 0.5;
    }
    let j1 = bessel::j1(u);
    let omj0 = bessel::one_minus_j0(u);
    let den = omj0 * (2.0 - omj0);
    j1 * j1 / den
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub total: f64,
    pub per_shot: Vec<f64>,
    /// Shots where `P(1 - P) = 0` and the continuous limit was used.
    pub degenerate_shots: Vec<usize>,
}

/// `sum_{n=1}^{N} I_n` with `t_n = n tau`.
pub fn fisher_information_sum(scenario: &FisherScenario, n_shots: usize) -> Result<FisherResult> {
    scenario.validate()?;
    let terms: Vec<(f64, bool)> = (1..=n_shots)
        .into_par_iter()
        .map(|n| scenario.shot_information(n as f64 * scenario.tau))
        .collect();
    if let Some(i) = terms.iter().position(|(v, _)| !v.is_finite() || *v < 0.0) {
        return Err(Error::invariant(format!("shot {} has Fisher information {}", i + 1, terms[i].0)));
    }
    let per_shot: Vec<f64> = terms.iter().map(|(v, _)| *v).collect();
    let degenerate_shots = terms
        .iter()
        .enumerate()
        .filter(|(_, (_, d))| *d)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(FisherResult {
        total: neumaier_sum(per_shot.iter().copied()),
        per_shot,
        degenerate_shots,
    })
}

/// Fisher information averaged over `phases` splittings `omega_r (1 + j / phases)`.
pub fn phase_averaged_information(scenario: &FisherScenario, n_shots: usize, phases: usize) -> Result<f64> {
    ensure(phases >= 1, || "need at least one phase".into())?;
    let mut acc = Vec::with_capacity(phases);
    for j in 0..phases {
        let s = scenario.with_omega_r(scenario.omega_r * (1.0 + j as f64 / phases as f64));
        acc.push(fisher_information_sum(&s, n_shots)?.total);
    }
    Ok(neumaier_sum(acc) / phases as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub n_exponent: f64,
    pub tau_exponent: f64,
    /// Mean of `I / (N^a tau^b)` with `a`, `b` the rounded fitted exponents.
    pub prefactor: f64,
    pub prefactor_exponents: (i32, i32),
    /// `(N, phase-averaged I)` at the scenario's `tau`.
    pub n_sweep: Vec<(usize, f64)>,
    /// `(tau, phase-averaged I)` at the largest N.
    pub tau_sweep: Vec<(f64, f64)>,
}

/// Number of splittings averaged per sweep point.
pub const SCALING_PHASES: usize = 16;

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn check_sweep(name: &str, v: &[f64]) -> Result<()> {
    ensure(v.len() >= 2, || format!("{name} sweep needs at least two values"))?;
    ensure(v.iter().all(|x| x.is_finite() && *x > 0.0), || format!("{name} sweep values must be positive"))?;
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    ensure(hi / lo >= 10.0 * (1.0 - 1e-12), || format!("{name} sweep must span at least one decade"))
}

/// Log-log exponents of the phase-averaged information in `N` (at the scenario's `tau`)
/// and in `tau` (at the largest `N`).
pub fn fit_scaling(scenario: &FisherScenario, n_values: &[usize], tau_values: &[f64]) -> Result<ScalingFit> {
    scenario.validate()?;
    let nf: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    check_sweep("N", &nf)?;
    check_sweep("tau", tau_values)?;
    let n_ref = *n_values.iter().max().unwrap();

    let n_sweep = n_values
        .par_iter()
        .map(|&n| phase_averaged_information(scenario, n, SCALING_PHASES).map(|i| (n, i)))
        .collect::<Result<Vec<_>>>()?;
    let tau_sweep = tau_values
        .par_iter()
        .map(|&tau| phase_averaged_information(&scenario.with_tau(tau), n_ref, SCALING_PHASES).map(|i| (tau, i)))
        .collect::<Result<Vec<_>>>()?;
    if n_sweep.iter().any(|(_, i)| *i <= 0.0) || tau_sweep.iter().any(|(_, i)| *i <= 0.0) {
        return Err(Error::invalid("sweep produced zero information; scenario carries no signal"));
    }
    let n_exponent = log_slope(&nf, &n_sweep.iter().map(|x| x.1).collect::<Vec<_>>());
    let tau_exponent = log_slope(tau_values, &tau_sweep.iter().map(|x| x.1).collect::<Vec<_>>());
    let (a, b) = (n_exponent.round() as i32, tau_exponent.round() as i32);
    let mut ratios: Vec<f64> = n_sweep
        .iter()
        .map(|&(n, i)| i / ((n as f64).powi(a) * scenario.tau.powi(b)))
        .collect();
    ratios.extend(tau_sweep.iter().map(|&(tau, i)| i / ((n_ref as f64).powi(a) * tau.powi(b))));
    let prefactor = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(ScalingFit {
        n_exponent,
        tau_exponent,
        prefactor,
        prefactor_exponents: (a, b),
        n_sweep,
        tau_sweep,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    /// Index 0 is `omega_r`, index 1 is `omega_s`.
    pub matrix: [[f64; 2]; 2],
    /// Information about `omega_r` with `omega_s` unknown: `1 / (M^-1)_00`.
    pub i_r: f64,
}

/// Phase-averaged two-parameter information of the noiseless sensing readout.
pub fn fisher_matrix_two_params(g1: f64, g2: f64, tau: f64, n_shots: usize) -> Result<FisherMatrix> {
    ensure(g1 >= 0.0 && g2 >= 0.0, || "amplitudes must be non-negative".into())?;
    ensure(tau > 0.0, || "tau must be positive".into())?;
    let k = tau.powi(4) * (n_shots as f64).powi(3) / 6.0;
    let sum = g1 * g1 + g2 * g2;
    let diff = g1 * g1 - g2 * g2;
    let matrix = [[k * sum, 2.0 * k * diff], [2.0 * k * diff, 4.0 * k * sum]];
    let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    if !(det > 0.0) || g1 * g2 == 0.0 {
        return Err(Error::invalid("information matrix is singular (an amplitude is zero)"));
    }
    let i_r = (2.0 / 3.0) * g1 * g1 * g2 * g2 / sum * tau.powi(4) * (n_shots as f64).powi(3);
    Ok(FisherMatrix { matrix, i_r })
}

/// `(1 / 2 pi) int_0^{2 pi} sin^2 x / (1 + c^2 + 2 c cos x)^{3/2} dx` for `0 < c < 1`.
pub fn f_c_integral(c: f64) -> Result<f64> {
    ensure(c > 0.0 && c < 1.0, || format!("c = {c} must lie in (0, 1)"))?;
    let f = |x: f64| x.sin().powi(2) / (1.0 + c * c + 2.0 * c * x.cos()).powf(1.5);
    // Symmetric about pi; the peak sits at x = pi where the denominator is smallest.
    let (v, _) = adaptive_gk(f, 0.0, PI, 1e-12);
    Ok(v / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scn(readout: Readout, noisy: bool) -> FisherScenario {
        FisherScenario {
            readout,
            g1: 0.8,
            g2: 1.3,
            tau: 0.05,
            omega_s: 17.0,
            omega_r: 0.9,
            noisy_omega_s: noisy,
            delta_width: 0.01,
        }
    }

    const ALL: [Readout; 5] = [
        Readout::SensingX,
        Readout::SensingY,
        Readout::HartmannHahnZ,
        Readout::MultiNucleusX,
        Readout::MultiNucleusY,
    ];

    #[test]
    fn zero_shots_and_zero_splitting() {
        for r in ALL {
            assert_eq!(fisher_information_sum(&scn(r, true), 0).unwrap().total, 0.0);
        }
        for r in [Readout::SensingX, Readout::HartmannHahnZ] {
            let mut s = scn(r, true);
            s.g1 = 1.0;
            s.g2 = 1.0;
            s.omega_r = 0.0;
            assert_eq!(fisher_information_sum(&s, 50).unwrap().total, 0.0);
        }
    }

    #[test]
    fn quotient_form_matches_definition() {
        for r in ALL {
            for noisy in [false, true] {
                let s = scn(r, noisy);
                for n in 1..40 {
                    let t = n as f64 * s.tau * 3.7;
                    let p = s.probability(t);
                    let d = s.probability_derivative(t);
                    let (i, _) = s.shot_information(t);
                    let q = p * (1.0 - p);
                    if q > 1e-8 {
                        let direct = d * d / q;
                        assert!((i - direct).abs() <= 1e-9 * direct.max(1e-12), "{r:?} {noisy} t={t}: {i} vs {direct}");
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_bessel_shot_uses_limit() {
        let s = FisherScenario {
            readout: Readout::SensingX,
            g1: 1.0,
            g2: 1.0,
            tau: 0.1,
            omega_s: 0.0,
            omega_r: PI, // cos(omega_r t / 2) = 0 at t = 1
            noisy_omega_s: true,
            delta_width: 0.0,
        };
        let (i, degenerate) = s.shot_information(1.0);
        assert!(degenerate);
        // u' = 2 tau g t |sin x| = 0.2, limit 0.5 u'^2.
        assert!((i - 0.5 * 0.04).abs() < 1e-15);
        let near = s.shot_information(1.0 + 1e-7).0;
        assert!((near - i).abs() < 1e-8);
    }

    #[test]
    fn closed_form_matrix() {
        let m = fisher_matrix_two_params(1.0, 1.0, 0.1, 100).unwrap();
        let expect = 1e-4 * 1e6 / 3.0;
        assert!((m.i_r / expect - 1.0).abs() < 1e-12);
        let inv00 = m.matrix[1][1] / (m.matrix[0][0] * m.matrix[1][1] - m.matrix[0][1].powi(2));
        assert!((1.0 / inv00 / m.i_r - 1.0).abs() < 1e-12);
        assert!(fisher_matrix_two_params(0.0, 0.0, 0.1, 10).is_err());
    }

    #[test]
    fn f_c_small_c_limit() {
        assert!((f_c_integral(1e-6).unwrap() - 0.5).abs() < 1e-6);
        assert!(f_c_integral(0.0).is_err());
        assert!(f_c_integral(1.0).is_err());
    }

    #[test]
    fn degenerate_sweeps_are_rejected() {
        let s = scn(Readout::SensingX, true);
        assert!(fit_scaling(&s, &[100], &[0.01, 0.1]).is_err());
        assert!(fit_scaling(&s, &[100, 200], &[0.01, 0.1]).is_err());
        assert!(fit_scaling(&s, &[100, 1000], &[0.01, 0.02]).is_err());
        let y = scn(Readout::SensingY, true);
        assert!(fit_scaling(&y, &[100, 1000], &[0.01, 0.1]).is_err());
    }
}
