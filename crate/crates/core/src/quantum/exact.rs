//! Exact evolution of one sensor qubit and up to [`MAX_NUCLEI`] nuclear spins.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pauli::{Pauli, PauliHamiltonian, PauliTerm};
use super::{Basis, NucleusSpec, TwoSpinHamiltonian, MAX_NUCLEI};
use crate::error::{ensure, Error, Result};
use crate::seed;

/// Largest nucleus count for the density-matrix (deterministic reset) path.
pub const MAX_NUCLEI_MIXED: usize = 8;

const NORM_TOLERANCE: f64 = 1e-8;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Pure state of the sensor (qubit 0) and `n_nuclei` nuclei.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinEnsembleState {
    pub n_nuclei: usize,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl SpinEnsembleState {
    /// Sensor up-z, every nucleus along +x, at `t = 0`.
    pub fn polarized(n_nuclei: usize) -> Result<Self> {
        ensure((1..=MAX_NUCLEI).contains(&n_nuclei), || {
            format!("nucleus count {n_nuclei} outside 1..={MAX_NUCLEI}")
        })?;
        let dim = 1usize << (n_nuclei + 1);
        let amp = c((1.0 / (1u64 << n_nuclei) as f64).sqrt());
        let amplitudes = (0..dim).map(|b| if b & 1 == 0 { amp } else { c(0.0) }).collect();
        Ok(Self {
            n_nuclei,
            amplitudes,
            time: 0.0,
        })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Reduced sensor density matrix `[[rho_00, rho_01], [rho_10, rho_11]]`.
    pub fn sensor_density(&self) -> [[Complex64; 2]; 2] {
        let mut r = [[c(0.0); 2]; 2];
        for k in 0..self.amplitudes.len() / 2 {
            let a0 = self.amplitudes[k << 1];
            let a1 = self.amplitudes[(k << 1) | 1];
            r[0][0] += a0 * a0.conj();
            r[0][1] += a0 * a1.conj();
            r[1][0] += a1 * a0.conj();
            r[1][1] += a1 * a1.conj();
        }
        r
    }

    pub fn sensor_purity(&self) -> f64 {
        purity2(&self.sensor_density())
    }

    /// `sum_m <Z_m>` over the nuclei.
    pub fn polarization(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * z_sum(b >> 1, self.n_nuclei))
            .sum()
    }
}

fn purity2(r: &[[Complex64; 2]; 2]) -> f64 {
    r.iter().flatten().map(|x| x.norm_sqr()).sum()
}

/// `sum_m (+1 if nucleus m is up else -1)` for a nuclear basis index.
fn z_sum(nuclear_index: usize, n: usize) -> f64 {
    let ones = (nuclear_index & ((1usize << n) - 1)).count_ones() as f64;
    n as f64 - 2.0 * ones
}

/// How the sensor is handled after each readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResetMode {
    /// Keep the joint state; no measurement back-action.
    None,
    /// Average over outcomes: trace out the sensor and re-prepare it up-z.
    Deterministic,
    /// Sample one outcome by the Born rule, keep the conditional nuclear state.
    Stochastic { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactProtocol {
    pub hamiltonian: TwoSpinHamiltonian,
    pub g_global: f64,
    pub tau: f64,
    /// Time between shot centres; shot `n` sits at `n * sample_interval`.
    pub sample_interval: f64,
    pub shots: usize,
    pub readout: Basis,
    pub reset: ResetMode,
    /// Common offset added to every Larmor frequency while moving to shot `n`.
    #[serde(default)]
    pub frequency_shifts: Option<Vec<f64>>,
    /// Keep nuclear precession running during the interaction window.
    #[serde(default)]
    pub coevolve: bool,
}

impl ExactProtocol {
    fn validate(&self, spec: &NucleusSpec) -> Result<()> {
        spec.validate()?;
        ensure(spec.len() <= MAX_NUCLEI, || {
            format!("{} nuclei exceed the limit of {MAX_NUCLEI}", spec.len())
        })?;
        ensure(self.tau > 0.0 && self.tau.is_finite(), || "tau must be positive".into())?;
        ensure(self.sample_interval > 0.0, || "sample_interval must be positive".into())?;
        ensure(self.g_global.is_finite(), || "g_global must be finite".into())?;
        ensure(self.hamiltonian != TwoSpinHamiltonian::SelectiveXy, || {
            "the selective drive has no exact model here".into()
        })?;
        ensure(self.readout != Basis::Y, || "exact readout supports X and Z".into())?;
        if self.coevolve {
            ensure(self.sample_interval >= self.tau, || {
                "co-evolving windows must not overlap (sample_interval >= tau)".into()
            })?;
        }
        if let Some(s) = &self.frequency_shifts {
            ensure(s.len() == self.shots, || "need one frequency shift per shot".into())?;
        }
        Ok(())
    }

    fn shift(&self, n: usize) -> f64 {
        self.frequency_shifts.as_ref().map_or(0.0, |s| s[n])
    }

    fn hamiltonian(&self, spec: &NucleusSpec, shift: f64) -> PauliHamiltonian {
        let mut h = PauliHamiltonian::default();
        for (m, &gm) in spec.couplings.iter().enumerate() {
            let q = m + 1;
            let g = self.g_global * gm;
            match self.hamiltonian {
                TwoSpinHamiltonian::Sensing => h.push(PauliTerm::new(g, &[(0, Pauli::X), (q, Pauli::X)])),
                _ => {
                    let k = g * std::f64::consts::FRAC_1_SQRT_2;
                    h.push(PauliTerm::new(k, &[(0, Pauli::X), (q, Pauli::X)]));
                    h.push(PauliTerm::new(k, &[(0, Pauli::Y), (q, Pauli::Y)]));
                }
            }
            if self.coevolve {
                h.push(PauliTerm::new(-0.5 * (spec.larmor[m] + shift), &[(q, Pauli::Z)]));
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactTrajectory {
    pub times: Vec<f64>,
    /// Readout probability of each shot.
    pub probabilities: Vec<f64>,
    /// Reduced sensor purity right after each interaction.
    pub sensor_purity: Vec<f64>,
    /// Nuclear purity after each shot (after the reset, when there is one).
    pub nuclear_purity: Vec<f64>,
    /// `sum_m <Z_m>` after each shot.
    pub polarization: Vec<f64>,
    /// Sampled outcomes (stochastic reset only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<bool>>,
    /// Final pure state; absent for the mixed-state deterministic path.
    #[serde(skip)]
    pub final_state: Option<SpinEnsembleState>,
}

/// Phase `sum_m (+-) theta_m / 2` acquired by nuclear basis state `j` under free precession.
fn precession_phases(spec: &NucleusSpec, shift: f64, dt: f64) -> Vec<f64> {
    let n = spec.len();
    (0..1usize << n)
        .map(|j| {
            (0..n)
                .map(|m| {
                    let theta = (spec.larmor[m] + shift) * dt;
                    if (j >> m) & 1 == 0 {
                        0.5 * theta
                    } else {
                        -0.5 * theta
                    }
                })
                .sum()
        })
        .collect()
}

fn precess_vector(psi: &mut [Complex64], phases: &[f64]) {
    for (b, a) in psi.iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, phases[b >> 1]);
    }
}

fn check_norm(norm: f64, shot: usize) -> Result<()> {
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::invariant(format!("norm drifted to {norm} at shot {shot}")));
    }
    Ok(())
}

/// Readout amplitude of sensor components `(a0, a1)` for the chosen basis and outcome.
fn project(basis: Basis, outcome_first: bool, a0: Complex64, a1: Complex64) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, 1.0);
    match (basis, outcome_first) {
        (Basis::Z, true) => a0,
        (Basis::Z, false) => a1,
        (_, true) => (a0 + i * a1) * s,
        (_, false) => (a0 - i * a1) * s,
    }
}

/// Repeated interaction / readout cycles on a few-spin system.
///
/// Between shots the nuclei precess freely; each shot applies `exp(-i H tau)` and reads the
/// sensor. With `coevolve` off the interaction is applied at the shot centre with precession
/// frozen, which is the picture behind the closed forms in [`super`].
pub fn evolve_exact(state: &SpinEnsembleState, spec: &NucleusSpec, protocol: &ExactProtocol) -> Result<ExactTrajectory> {
    protocol.validate(spec)?;
    ensure(state.n_nuclei == spec.len(), || {
        format!("state has {} nuclei, spec has {}", state.n_nuclei, spec.len())
    })?;
    ensure(state.amplitudes.len() == 1usize << (spec.len() + 1), || "state dimension mismatch".into())?;
    check_norm(state.norm(), 0)?;
    match protocol.reset {
        ResetMode::Deterministic => evolve_mixed(state, spec, protocol),
        _ => evolve_pure(state, spec, protocol),
    }
}

/// Time between the end of one interaction and the start of the next.
fn gaps(protocol: &ExactProtocol, start: f64) -> (f64, f64) {
    let lead = if protocol.coevolve { 0.5 * protocol.tau } else { 0.0 };
    let first = protocol.sample_interval - lead - start;
    let rest = protocol.sample_interval - 2.0 * lead;
    (first.max(0.0), rest)
}

fn evolve_pure(state: &SpinEnsembleState, spec: &NucleusSpec, protocol: &ExactProtocol) -> Result<ExactTrajectory> {
    let mut psi = state.amplitudes.clone();
    let n = spec.len();
    let mut rng = match protocol.reset {
        ResetMode::Stochastic { seed } => Some(seed::rng_for(seed, "exact-readout", 0)),
        _ => None,
    };
    let (first_gap, gap) = gaps(protocol, state.time);
    let mut out = ExactTrajectory {
        times: Vec::with_capacity(protocol.shots),
        probabilities: Vec::with_capacity(protocol.shots),
        sensor_purity: Vec::with_capacity(protocol.shots),
        nuclear_purity: Vec::with_capacity(protocol.shots),
        polarization: Vec::with_capacity(protocol.shots),
        outcomes: rng.as_ref().map(|_| Vec::with_capacity(protocol.shots)),
        final_state: None,
    };
    let fixed_h = protocol.frequency_shifts.is_none().then(|| protocol.hamiltonian(spec, 0.0));
    if let Some(ResetMode::Stochastic { .. }) | Some(ResetMode::Deterministic) = Some(protocol.reset) {
        ensure(sensor_is_up(&psi), || "reset modes need the sensor to start up-z".into())?;
    }
    for shot in 0..protocol.shots {
        let shift = protocol.shift(shot);
        let dt = if shot == 0 { first_gap } else { gap };
        precess_vector(&mut psi, &precession_phases(spec, shift, dt));
        match &fixed_h {
            Some(h) => h.evolve(protocol.tau, &mut psi),
            None => protocol.hamiltonian(spec, shift).evolve(protocol.tau, &mut psi),
        }
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        check_norm(norm, shot + 1)?;

        let p: f64 = (0..psi.len() / 2)
            .map(|k| project(protocol.readout, true, psi[k << 1], psi[(k << 1) | 1]).norm_sqr())
            .sum();
        let view = SpinEnsembleState {
            n_nuclei: n,
            amplitudes: psi.clone(),
            time: 0.0,
        };
        let sp = view.sensor_purity();
        out.sensor_purity.push(sp);

        if let Some(rng) = rng.as_mut() {
            let first = rng.random::<f64>() < p;
            let weight = if first { p } else { 1.0 - p };
            let scale = 1.0 / weight.max(f64::MIN_POSITIVE).sqrt();
            let mut next = vec![c(0.0); psi.len()];
            for k in 0..psi.len() / 2 {
                next[k << 1] = project(protocol.readout, first, psi[k << 1], psi[(k << 1) | 1]) * scale;
            }
            psi = next;
            out.outcomes.as_mut().unwrap().push(first);
            out.nuclear_purity.push(1.0);
        } else {
            out.nuclear_purity.push(sp);
        }
        out.probabilities.push(p.clamp(0.0, 1.0));
        out.polarization.push(
            psi.iter()
                .enumerate()
                .map(|(b, a)| a.norm_sqr() * z_sum(b >> 1, n))
                .sum(),
        );
        out.times.push(state.time + (shot + 1) as f64 * protocol.sample_interval);
    }
    out.final_state = Some(SpinEnsembleState {
        n_nuclei: n,
        amplitudes: psi,
        time: state.time + protocol.shots as f64 * protocol.sample_interval,
    });
    Ok(out)
}

fn sensor_is_up(psi: &[Complex64]) -> bool {
    psi.iter().skip(1).step_by(2).map(|a| a.norm_sqr()).sum::<f64>() < 1e-20
}

/// Kraus blocks `A = <up|U|up>`, `B = <down|U|up>` on the nuclear space.
fn kraus_blocks(h: &PauliHamiltonian, tau: f64, n: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let d = 1usize << n;
    let mut a = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    let mut psi = vec![c(0.0); 2 * d];
    for k in 0..d {
        psi.iter_mut().for_each(|x| *x = c(0.0));
        psi[k << 1] = c(1.0);
        h.evolve(tau, &mut psi);
        for j in 0..d {
            a[(j, k)] = psi[j << 1];
            b[(j, k)] = psi[(j << 1) | 1];
        }
    }
    (a, b)
}

fn evolve_mixed(state: &SpinEnsembleState, spec: &NucleusSpec, protocol: &ExactProtocol) -> Result<ExactTrajectory> {
    let n = spec.len();
    ensure(n <= MAX_NUCLEI_MIXED, || {
        format!("deterministic reset keeps a density matrix and supports at most {MAX_NUCLEI_MIXED} nuclei")
    })?;
    ensure(sensor_is_up(&state.amplitudes), || "reset modes need the sensor to start up-z".into())?;
    let d = 1usize << n;
    let chi = DMatrix::from_fn(d, 1, |j, _| state.amplitudes[j << 1]);
    let mut rho = &chi * chi.adjoint();
    let (first_gap, gap) = gaps(protocol, state.time);
    let mut blocks = protocol
        .frequency_shifts
        .is_none()
        .then(|| kraus_blocks(&protocol.hamiltonian(spec, 0.0), protocol.tau, n));

    let mut out = ExactTrajectory {
        times: Vec::new(),
        probabilities: Vec::new(),
        sensor_purity: Vec::new(),
        nuclear_purity: Vec::new(),
        polarization: Vec::new(),
        outcomes: None,
        final_state: None,
    };
    let i = Complex64::new(0.0, 1.0);
    for shot in 0..protocol.shots {
        let shift = protocol.shift(shot);
        let dt = if shot == 0 { first_gap } else { gap };
        let ph = precession_phases(spec, shift, dt);
        for jj in 0..d {
            for kk in 0..d {
                rho[(jj, kk)] *= Complex64::from_polar(1.0, ph[jj] - ph[kk]);
            }
        }
        let owned;
        let (a, b) = match &blocks {
            Some((a, b)) => (a, b),
            None => {
                owned = kraus_blocks(&protocol.hamiltonian(spec, shift), protocol.tau, n);
                (&owned.0, &owned.1)
            }
        };
        let ar = a * &rho;
        let br = b * &rho;
        let r00 = (&ar * a.adjoint()).trace();
        let r01 = (&ar * b.adjoint()).trace();
        let r11 = (&br * b.adjoint()).trace();
        let sensor = [[r00, r01], [r01.conj(), r11]];
        let p = match protocol.readout {
            Basis::Z => r00.re,
            _ => {
                let k = (a + b * i) * c(std::f64::consts::FRAC_1_SQRT_2);
                (&k * &rho * k.adjoint()).trace().re
            }
        };
        rho = &ar * a.adjoint() + &br * b.adjoint();
        let tr = rho.trace();
        check_norm(tr.re, shot + 1)?;

        out.sensor_purity.push(purity2(&sensor) / (tr.re * tr.re));
        out.nuclear_purity.push(rho.iter().map(|x| x.norm_sqr()).sum());
        out.polarization.push((0..d).map(|j| rho[(j, j)].re * z_sum(j, n)).sum());
        out.probabilities.push(p.clamp(0.0, 1.0));
        out.times.push(state.time + (shot + 1) as f64 * protocol.sample_interval);
        if protocol.frequency_shifts.is_some() {
            blocks = None;
        }
    }
    Ok(out)
}

/// Sensor coherence `<up|rho|down>` after `n` nuclei along x (precessed to time `t`) couple
/// to a sensor prepared along +x through `g sigma_z sum_m X_m` for `tau`, computed exactly.
pub fn exact_coherence(n: usize, g: f64, tau: f64, delta: f64, t: f64) -> Result<Complex64> {
    ensure((1..=MAX_NUCLEI).contains(&n), || format!("nucleus count {n} outside 1..={MAX_NUCLEI}"))?;
    let dim = 1usize << (n + 1);
    let amp = c((1.0 / dim as f64).sqrt());
    let mut psi = vec![amp; dim];
    let spec = NucleusSpec::new(vec![1.0; n], vec![delta; n])?;
    precess_vector(&mut psi, &precession_phases(&spec, 0.0, t));
    let mut h = PauliHamiltonian::default();
    for m in 1..=n {
        h.push(PauliTerm::new(g, &[(0, Pauli::Z), (m, Pauli::X)]));
    }
    h.evolve(tau, &mut psi);
    let view = SpinEnsembleState {
        n_nuclei: n,
        amplitudes: psi,
        time: t,
    };
    Ok(view.sensor_density()[0][1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{coherence_closed_form, twospin_probabilities};

    fn protocol(h: TwoSpinHamiltonian, readout: Basis, reset: ResetMode, g: f64) -> ExactProtocol {
        ExactProtocol {
            hamiltonian: h,
            g_global: g,
            tau: 0.3,
            sample_interval: 0.7,
            shots: 1,
            readout,
            reset,
            frequency_shifts: None,
            coevolve: false,
        }
    }

    #[test]
    fn single_shot_matches_closed_forms() {
        let spec = NucleusSpec::new(vec![1.0, 1.0], vec![2.3, 1.9]).unwrap();
        let state = SpinEnsembleState::polarized(2).unwrap();
        for h in [TwoSpinHamiltonian::Sensing, TwoSpinHamiltonian::FlipFlop] {
            for basis in [Basis::X, Basis::Z] {
                for reset in [ResetMode::None, ResetMode::Deterministic] {
                    let pr = protocol(h, basis, reset, 0.9);
                    let tr = evolve_exact(&state, &spec, &pr).unwrap();
                    let expect = twospin_probabilities(0.9, 0.3, 2.3, 1.9, 0.7, h, basis).unwrap();
                    assert!((tr.probabilities[0] - expect).abs() < 1e-10, "{h:?} {basis:?} {reset:?}");
                }
            }
        }
    }

    #[test]
    fn uncoupled_sensor_stays_pure() {
        let spec = NucleusSpec::new(vec![1.0, 0.5, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        let state = SpinEnsembleState::polarized(3).unwrap();
        let mut pr = protocol(TwoSpinHamiltonian::Sensing, Basis::Z, ResetMode::Deterministic, 0.0);
        pr.shots = 10;
        let tr = evolve_exact(&state, &spec, &pr).unwrap();
        assert!(tr.probabilities.iter().all(|p| (p - 1.0).abs() < 1e-14));
        assert!(tr.sensor_purity.iter().all(|p| (p - 1.0).abs() < 1e-14));
    }

    #[test]
    fn coherence_engine_matches_closed_form() {
        for n in 1..=4 {
            let a = exact_coherence(n, 0.7, 0.4, 1.3, 2.2).unwrap();
            let b = coherence_closed_form(n as u32, 0.7, 0.4, 1.3, 2.2);
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn stochastic_and_deterministic_agree_on_average() {
        let spec = NucleusSpec::new(vec![1.0, 1.0], vec![2.3, 1.9]).unwrap();
        let state = SpinEnsembleState::polarized(2).unwrap();
        let mut det = protocol(TwoSpinHamiltonian::Sensing, Basis::Z, ResetMode::Deterministic, 0.8);
        det.shots = 3;
        let reference = evolve_exact(&state, &spec, &det).unwrap();
        let runs = 4000;
        let mut mean = 0.0;
        for s in 0..runs {
            let mut st = det.clone();
            st.reset = ResetMode::Stochastic { seed: s };
            mean += evolve_exact(&state, &spec, &st).unwrap().probabilities[2];
        }
        mean /= runs as f64;
        assert!((mean - reference.probabilities[2]).abs() < 0.02);
    }

    #[test]
    fn limits_are_enforced() {
        assert!(SpinEnsembleState::polarized(13).is_err());
        let spec = NucleusSpec::new(vec![1.0; 9], vec![1.0; 9]).unwrap();
        let state = SpinEnsembleState::polarized(9).unwrap();
        let pr = protocol(TwoSpinHamiltonian::Sensing, Basis::Z, ResetMode::Deterministic, 0.1);
        assert!(evolve_exact(&state, &spec, &pr).is_err());
    }
}
