//! Closed-form signal and readout-probability models.
//!
//! All frequencies are angular and dimensionless; `t` is the shot centre time.

use std::f64::consts::PI;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::error::{ensure, Result};

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Physics knobs of one repeated-readout experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Sensor-sample coupling.
    pub g: f64,
    /// Interaction time per shot.
    pub tau: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Measurement basis angle: 0 reads along x, pi/2 along y.
    pub phi_m: f64,
    /// Central-frequency amplification strength.
    #[serde(default)]
    pub alpha: f64,
    pub n_shots: usize,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            g: 1.0,
            tau: 5e-3,
            delta1: 100.0,
            delta2: 100.01,
            phi_m: 0.0,
            alpha: 0.0,
            n_shots: 1000,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.tau.is_finite() && self.tau > 0.0, || "tau must be positive".into())?;
        ensure(self.n_shots >= 1, || "n_shots must be at least 1".into())?;
        for (name, v) in [
            ("g", self.g),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("phi_m", self.phi_m),
            ("alpha", self.alpha),
        ] {
            ensure(v.is_finite(), || format!("{name} must be finite"))?;
        }
        Ok(())
    }

    /// Beat (difference) frequency `delta1 - delta2`.
    pub fn beat(&self) -> f64 {
        self.delta1 - self.delta2
    }

    /// Mean frequency `(delta1 + delta2) / 2`.
    pub fn mean_frequency(&self) -> f64 {
        0.5 * (self.delta1 + self.delta2)
    }

    /// Regime warnings that depend only on the parameters.
    pub fn regime_flags(&self, m: &MicroNoise) -> RegimeFlags {
        let mut f = RegimeFlags::empty();
        let reach = self.delta1.abs().max(self.delta2.abs()) + m.delta_width + m.epsilon0.abs();
        if self.tau * reach >= PI {
            f |= RegimeFlags::INTERACTION_TOO_LONG;
        }
        if 2.0 * self.g.abs() * self.tau > WEAK_COUPLING_LIMIT {
            f |= RegimeFlags::COUPLING_NOT_WEAK;
        }
        f
    }
}

/// Threshold on `2 g tau` above which the weak-coupling form is flagged.
pub const WEAK_COUPLING_LIMIT: f64 = 0.1;

/// Threshold on `sigma t` below which the macroscopic average is flagged as incomplete.
pub const MACRO_AVERAGING_LIMIT: f64 = 10.0;

/// Microscopic (within one sensor's volume) uniform frequency spread.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MicroNoise {
    /// Half-width of the uniform spread.
    pub delta_width: f64,
    /// Centre of the spread.
    pub epsilon0: f64,
}

impl MicroNoise {
    pub fn new(delta_width: f64, epsilon0: f64) -> Self {
        Self {
            delta_width,
            epsilon0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.delta_width.is_finite() && self.delta_width >= 0.0, || {
            "delta_width must be non-negative".into()
        })?;
        ensure(self.epsilon0.is_finite(), || "epsilon0 must be finite".into())
    }

    pub fn shifted(&self, eps: f64) -> Self {
        Self {
            delta_width: self.delta_width,
            epsilon0: self.epsilon0 + eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseValue {
    pub phi: f64,
    pub t: f64,
}

bitflags! {
    /// Warnings raised when an asymptotic assumption behind a formula is not met.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
    pub struct RegimeFlags: u8 {
        /// `tau (max|delta| + Delta) >= pi`.
        const INTERACTION_TOO_LONG = 1;
        /// `2 g tau` above the weak-coupling threshold.
        const COUPLING_NOT_WEAK = 1 << 1;
        /// `sigma t` below the averaging threshold at some evaluated time.
        const MACRO_NOT_AVERAGED = 1 << 2;
    }
}

impl RegimeFlags {
    pub fn names(&self) -> Vec<String> {
        self.iter_names().map(|(n, _)| n.to_ascii_lowercase()).collect()
    }

    pub fn for_macro_average(sigma: f64, t: f64) -> Self {
        if sigma * t < MACRO_AVERAGING_LIMIT {
            RegimeFlags::MACRO_NOT_AVERAGED
        } else {
            RegimeFlags::empty()
        }
    }
}

/// A value tagged with the regime warnings that applied when it was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub flags: RegimeFlags,
}

/// Induced coil voltage of two precessing lines under a uniform spread `sigma`.
pub fn classical_coil_signal(t: f64, g: f64, delta1: f64, delta2: f64, sigma: f64) -> f64 {
    2.0 * g
        * delta1
        * (0.5 * (delta1 + delta2) * t).cos()
        * (0.5 * (delta1 - delta2) * t).cos()
        * sinc(sigma * t)
}

/// Beat factor including the central-frequency amplification offset.
fn beat_factor(t: f64, p: &ProtocolParams) -> f64 {
    (0.5 * p.beat() * t).cos() + 0.5 * p.alpha
}

/// Midpoint phase accumulated during the shot centred at `t`.
///
/// Uses the short-interaction approximation of the shot integral; see [`windowed_phase`]
/// for the exact window average.
pub fn accumulated_phase(t: f64, p: &ProtocolParams, m: &MicroNoise) -> Flagged<PhaseValue> {
    let carrier = ((p.mean_frequency() + m.epsilon0) * t).sin();
    let phi = 2.0 * p.g * p.tau * sinc(m.delta_width * t) * carrier * beat_factor(t, p);
    Flagged {
        value: PhaseValue { phi, t },
        flags: p.regime_flags(m),
    }
}

/// Phase from integrating the coupling over the shot window `[t - tau/2, t + tau/2]`.
///
/// Each line contributes `g tau sinc(w tau / 2) sin(w t)`; the microscopic average enters
/// as `sinc(Delta t)` evaluated at the window centre, which is exact to `O((Delta tau)^2)`.
pub fn windowed_phase(t: f64, p: &ProtocolParams, m: &MicroNoise) -> PhaseValue {
    let half = 0.5 * p.tau;
    let line = |w: f64| sinc(w * half) * (w * t).sin();
    let w1 = p.delta1 + m.epsilon0;
    let w2 = p.delta2 + m.epsilon0;
    let wbar = p.mean_frequency() + m.epsilon0;
    let mut s = line(w1) + line(w2);
    if p.alpha != 0.0 {
        s += p.alpha * line(wbar);
    }
    PhaseValue {
        phi: p.g * p.tau * sinc(m.delta_width * t) * s,
        t,
    }
}

/// Readout probability `sin^2(phi + phi_m / 2)`.
pub fn measurement_probability(phi: PhaseValue, phi_m: f64) -> f64 {
    (phi.phi + 0.5 * phi_m).sin().powi(2)
}

/// Single-sensor probability without macroscopic averaging.
pub fn sensor_probability(t: f64, p: &ProtocolParams, m: &MicroNoise) -> f64 {
    measurement_probability(accumulated_phase(t, p, m).value, p.phi_m)
}

/// Macroscopically averaged x-readout probability at weak coupling.
pub fn weak_coupling_probability(t: f64, p: &ProtocolParams, m: &MicroNoise) -> Flagged<f64> {
    let a = p.g * p.tau * sinc(m.delta_width * t);
    let c = beat_factor(t, p);
    Flagged {
        value: 2.0 * a * a * c * c,
        flags: p.regime_flags(m),
    }
}

/// Macroscopically averaged probability at arbitrary coupling, `sigma t >> 1` limit.
pub fn strong_coupling_probability(t: f64, p: &ProtocolParams, m: &MicroNoise) -> f64 {
    let arg = 4.0 * p.g * p.tau * sinc(m.delta_width * t) * beat_factor(t, p);
    0.5 * (1.0 - p.phi_m.cos() * bessel::j0(arg))
}

/// Flip-flop (Hartmann-Hahn) survival probability; independent of any common frequency shift.
pub fn hartmann_hahn_probability(t: f64, p: &ProtocolParams) -> Flagged<f64> {
    let c = (0.5 * p.beat() * t).cos();
    Flagged {
        value: (p.g * p.tau * c).cos().powi(2),
        flags: p.regime_flags(&MicroNoise::default()),
    }
}
