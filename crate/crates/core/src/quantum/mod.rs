//! Few-spin quantum models: closed-form readout signals and exact state-vector evolution.
//!
//! Conventions shared by the closed forms and [`exact`]: operators are Pauli matrices, the
//! sensor starts in up-z, and a nucleus with Larmor offset `delta` that started along +x is
//! found at time `t` in `cos(delta t / 2)|+x> + i sin(delta t / 2)|-x>`. "Z" readout is the
//! probability of finding the sensor up-z; "X" readout projects on `(|up> - i|down>)/sqrt 2`,
//! the axis along which the sensing interaction first rotates the sensor.

pub mod exact;
pub mod pauli;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::signal::{Flagged, RegimeFlags, WEAK_COUPLING_LIMIT};

pub use exact::{
    evolve_exact, exact_coherence, ExactProtocol, ExactTrajectory, ResetMode, SpinEnsembleState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSpinHamiltonian {
    /// `g sigma_x sum_i X_i`.
    Sensing,
    /// `(g / sqrt 2) sum_i (sigma_x X_i + sigma_y Y_i)`.
    FlipFlop,
    /// Spectrally selective `sigma_x (Y_1 - Y_2)`-type drive; closed form only, basis ignored.
    SelectiveXy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    X,
    Y,
    Z,
}

/// Off-diagonal sensor element after `n` identical nuclei along x couple for `tau`:
/// `(cos 2 g tau - i sin 2 g tau cos delta t)^n / 2`.
pub fn coherence_closed_form(n: u32, g: f64, tau: f64, delta: f64, t: f64) -> Complex64 {
    let x = 2.0 * g * tau;
    let base = Complex64::new(x.cos(), -x.sin() * (delta * t).cos());
    0.5 * base.powu(n)
}

/// Large-`n` limit at fixed `n g tau`: `exp(-2 i n g tau cos delta t) / 2`.
pub fn semiclassical_coherence(n: u32, g: f64, tau: f64, delta: f64, t: f64) -> Complex64 {
    let phase = 2.0 * n as f64 * g * tau * (delta * t).cos();
    0.5 * Complex64::new(0.0, -phase).exp()
}

/// Sensor readout probability for two nuclei after one interaction window of length `tau`.
pub fn twospin_probabilities(
    g: f64,
    tau: f64,
    delta1: f64,
    delta2: f64,
    t: f64,
    hamiltonian: TwoSpinHamiltonian,
    basis: Basis,
) -> Result<f64> {
    let gt = g * tau;
    let (c1, c2) = ((delta1 * t).cos(), (delta2 * t).cos());
    let v = match (hamiltonian, basis) {
        (TwoSpinHamiltonian::FlipFlop, Basis::Z) => {
            0.25 * (3.0 + (4.0 * gt).cos() - (2.0 * gt).sin().powi(2) * ((delta1 - delta2) * t).cos())
        }
        (TwoSpinHamiltonian::FlipFlop, Basis::X) => {
            0.5 + std::f64::consts::FRAC_1_SQRT_2 * gt.sin() * gt.cos().powi(3) * (c1 + c2)
        }
        (TwoSpinHamiltonian::Sensing, Basis::Z) => {
            0.25 * (3.0 + (4.0 * gt).cos()) - 0.5 * (2.0 * gt).sin().powi(2) * c1 * c2
        }
        (TwoSpinHamiltonian::Sensing, Basis::X) => 0.5 + 0.25 * (4.0 * gt).sin() * (c1 + c2),
        (TwoSpinHamiltonian::SelectiveXy, _) => {
            0.5 - (1.0 - (4.0 * gt).cos() * ((delta1 - delta2) * t).sin()) / 16.0
        }
        (_, Basis::Y) => {
            return Err(crate::Error::invalid("two-spin closed forms exist for X and Z readout only"));
        }
    };
    Ok(v)
}

/// Couplings and Larmor offsets of the nuclei.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NucleusSpec {
    pub couplings: Vec<f64>,
    pub larmor: Vec<f64>,
}

/// Largest nucleus count handled by the exact simulator.
pub const MAX_NUCLEI: usize = 12;

impl NucleusSpec {
    pub fn new(couplings: Vec<f64>, larmor: Vec<f64>) -> Result<Self> {
        let s = Self { couplings, larmor };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.couplings.len() == self.larmor.len(), || {
            "couplings and larmor offsets differ in length".into()
        })?;
        ensure(!self.couplings.is_empty(), || "need at least one nucleus".into())?;
        ensure(
            self.couplings.iter().chain(&self.larmor).all(|v| v.is_finite()),
            || "nucleus parameters must be finite".into(),
        )
    }
}

/// Collective-phase readout of many nuclei without back-action.
///
/// `Y`: `1/2 + sin(2 sum_m g_m tau cos delta_m t) / 2`; `X`: the same with cosine.
/// Flags `COUPLING_NOT_WEAK` when a single nucleus rotates the sensor appreciably, where
/// back-action is no longer negligible.
pub fn multinucleus_readout(spec: &NucleusSpec, tau: f64, t: f64, basis: Basis) -> Result<Flagged<f64>> {
    spec.validate()?;
    let phase: f64 = spec
        .couplings
        .iter()
        .zip(&spec.larmor)
        .map(|(g, d)| g * tau * (d * t).cos())
        .sum();
    let value = match basis {
        Basis::Y => 0.5 + 0.5 * (2.0 * phase).sin(),
        Basis::X => 0.5 + 0.5 * (2.0 * phase).cos(),
        Basis::Z => return Err(crate::Error::invalid("multi-nucleus readout is defined for X and Y")),
    };
    let gmax = spec.couplings.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let flags = if 2.0 * gmax * tau > WEAK_COUPLING_LIMIT {
        RegimeFlags::COUPLING_NOT_WEAK
    } else {
        RegimeFlags::empty()
    };
    Ok(Flagged { value, flags })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_limits() {
        assert_eq!(coherence_closed_form(5, 0.0, 1.0, 2.0, 3.0), Complex64::new(0.5, 0.0));
        let ff = twospin_probabilities(0.0, 1.0, 2.0, 3.0, 0.4, TwoSpinHamiltonian::FlipFlop, Basis::Z).unwrap();
        let sx = twospin_probabilities(0.0, 1.0, 2.0, 3.0, 0.4, TwoSpinHamiltonian::Sensing, Basis::X).unwrap();
        assert_eq!(ff, 1.0);
        assert_eq!(sx, 0.5);
        let spec = NucleusSpec::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(multinucleus_readout(&spec, 0.1, 0.3, Basis::Y).unwrap().value, 0.5);
        assert_eq!(multinucleus_readout(&spec, 0.1, 0.3, Basis::X).unwrap().value, 1.0);
    }

    #[test]
    fn two_equal_nuclei_collapse_to_beat_form() {
        let (g, tau) = (0.3, 0.2);
        let (d1, d2) = (5.0, 4.2);
        let spec = NucleusSpec::new(vec![g, g], vec![d1, d2]).unwrap();
        for k in 0..50 {
            let t = 0.137 * k as f64;
            let y = multinucleus_readout(&spec, tau, t, Basis::Y).unwrap().value;
            let arg = 2.0 * g * tau * ((d1 - d2) * t / 2.0).cos() * ((d1 + d2) * t / 2.0).cos();
            let expect = (arg - std::f64::consts::FRAC_PI_4).cos().powi(2);
            assert!((y - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn semiclassical_limit_tracks_closed_form() {
        let n = 1000;
        let g = 1e-2 / n as f64;
        for &t in &[0.0, 0.7, 2.1] {
            let a = coherence_closed_form(n, g, 1.0, 1.3, t);
            let b = semiclassical_coherence(n, g, 1.0, 1.3, t);
            assert!((a - b).norm() < 1e-3);
        }
    }
}
