//! Noise models and ensemble averaging.
//!
//! Static offsets (one frequency shift per sensor, drawn from a macroscopic distribution)
//! are averaged by quadrature, Monte Carlo, or an exact Bessel series. Time-dependent
//! Ornstein-Uhlenbeck noise is sampled path by path and integrated over each shot window.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::error::{ensure, Error, Result};
use crate::quadrature::{self, adaptive_gk, NeumaierSum, Rule};
use crate::seed;
use crate::signal::{sinc, Flagged, MicroNoise, ProtocolParams, RegimeFlags};
use crate::trace::{ProbabilityTrace, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// Static offset uniform on `center +- half_width`.
    UniformOffset { half_width: f64, center: f64 },
    /// Static offset `~ Normal(0, sigma^2)`.
    GaussianMacroscopic { sigma: f64 },
    /// Static offset uniform on `+- half_width`.
    UniformMacroscopic { half_width: f64 },
    /// Mean-reverting time-dependent offset, `d eps = -eps / tau_t dt + sigma_t dW`.
    OrnsteinUhlenbeck {
        correlation_time: f64,
        diffusion: f64,
        seed: u64,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            ensure(v.is_finite() && v >= 0.0, || format!("{name} must be non-negative"))
        };
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::UniformOffset { half_width, center } => {
                nonneg("half_width", half_width)?;
                ensure(center.is_finite(), || "center must be finite".into())
            }
            NoiseModel::GaussianMacroscopic { sigma } => nonneg("sigma", sigma),
            NoiseModel::UniformMacroscopic { half_width } => nonneg("half_width", half_width),
            NoiseModel::OrnsteinUhlenbeck {
                correlation_time,
                diffusion,
                ..
            } => {
                nonneg("diffusion", diffusion)?;
                ensure(correlation_time.is_finite() && correlation_time > 0.0, || {
                    "correlation_time must be positive".into()
                })
            }
        }
    }

    /// Width that sets the macroscopic averaging time, `sigma` or the uniform half-width.
    pub fn macroscopic_width(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::UniformOffset { half_width, .. } => half_width,
            NoiseModel::GaussianMacroscopic { sigma } => sigma,
            NoiseModel::UniformMacroscopic { half_width } => half_width,
            NoiseModel::OrnsteinUhlenbeck {
                correlation_time,
                diffusion,
                ..
            } => OuProcess::new(correlation_time, diffusion)
                .map(|p| p.stationary_variance().sqrt())
                .unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleMethod {
    /// Gauss-Hermite (Gaussian) or Gauss-Legendre (uniform) rule of the given order.
    Quadrature { order: usize },
    MonteCarlo { n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageTarget {
    /// One static offset added to `epsilon0`.
    StaticOffset,
    /// Whole noise path (time-dependent models).
    Path,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub method: EnsembleMethod,
    pub target: AverageTarget,
}

impl EnsembleSpec {
    pub fn quadrature(order: usize) -> Self {
        Self {
            method: EnsembleMethod::Quadrature { order },
            target: AverageTarget::StaticOffset,
        }
    }

    pub fn monte_carlo(n_samples: usize, seed: u64) -> Self {
        Self {
            method: EnsembleMethod::MonteCarlo { n_samples, seed },
            target: AverageTarget::StaticOffset,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            EnsembleMethod::Quadrature { order } => {
                ensure(order >= 8, || format!("quadrature order {order} is below 8"))
            }
            EnsembleMethod::MonteCarlo { n_samples, .. } => ensure(n_samples >= 1000, || {
                format!("monte carlo needs at least 1000 samples, got {n_samples}")
            }),
        }
    }
}

/// Offsets and weights representing a static-offset distribution.
fn static_ensemble(noise: &NoiseModel, spec: &EnsembleSpec) -> Result<Rule> {
    noise.validate()?;
    spec.validate()?;
    let point = |c: f64| Rule {
        nodes: vec![c],
        weights: vec![1.0],
    };
    let (center, dist) = match *noise {
        NoiseModel::None => return Ok(point(0.0)),
        NoiseModel::OrnsteinUhlenbeck { .. } => {
            return Err(Error::invalid(
                "time-dependent noise cannot be averaged as a static offset; sample paths instead",
            ))
        }
        NoiseModel::GaussianMacroscopic { sigma } => (0.0, (true, sigma)),
        NoiseModel::UniformMacroscopic { half_width } => (0.0, (false, half_width)),
        NoiseModel::UniformOffset { half_width, center } => (center, (false, half_width)),
    };
    let (gaussian, width) = dist;
    if width == 0.0 {
        return Ok(point(center));
    }
    let mut rule = match spec.method {
        EnsembleMethod::Quadrature { order } if gaussian => quadrature::normal_expectation_rule(order, width),
        EnsembleMethod::Quadrature { order } => {
            let mut r = quadrature::gauss_legendre(order, -width, width);
            r.weights.iter_mut().for_each(|w| *w /= 2.0 * width);
            r
        }
        EnsembleMethod::MonteCarlo { n_samples, seed } => {
            let mut rng = seed::rng_for(seed, "macroscopic", 0);
            let nodes: Vec<f64> = (0..n_samples)
                .map(|_| {
                    if gaussian {
                        width * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        rng.random_range(-width..width)
                    }
                })
                .collect();
            Rule {
                weights: vec![1.0 / n_samples as f64; n_samples],
                nodes,
            }
        }
    };
    rule.nodes.iter_mut().for_each(|x| *x += center);
    Ok(rule)
}

/// `E_eps[ f(t; epsilon0 + eps) ]` at every grid time.
///
/// The same offset ensemble is used at every time, so the result is the signal of one
/// fixed ensemble of sensors. Deterministic for a given seed.
pub fn average_over_macroscopic<F>(
    probability_fn: F,
    noise: &NoiseModel,
    spec: &EnsembleSpec,
    grid: &TimeGrid,
    p: &ProtocolParams,
    m: &MicroNoise,
) -> Result<ProbabilityTrace>
where
    F: Fn(f64, &ProtocolParams, &MicroNoise) -> f64 + Sync,
{
    average_over_macroscopic_with_error(probability_fn, noise, spec, grid, p, m).map(|(t, _)| t)
}

/// As [`average_over_macroscopic`], also returning the Monte Carlo standard error per point
/// (zero for quadrature).
pub fn average_over_macroscopic_with_error<F>(
    probability_fn: F,
    noise: &NoiseModel,
    spec: &EnsembleSpec,
    grid: &TimeGrid,
    p: &ProtocolParams,
    m: &MicroNoise,
) -> Result<(ProbabilityTrace, Vec<f64>)>
where
    F: Fn(f64, &ProtocolParams, &MicroNoise) -> f64 + Sync,
{
    if grid.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    p.validate()?;
    m.validate()?;
    let rule = static_ensemble(noise, spec)?;
    let is_mc = matches!(spec.method, EnsembleMethod::MonteCarlo { .. }) && rule.len() > 1;
    let n = rule.len() as f64;

    let (values, errors): (Vec<f64>, Vec<f64>) = grid
        .times()
        .par_iter()
        .map(|&t| {
            let mut mean = NeumaierSum::default();
            let mut sq = NeumaierSum::default();
            for (&eps, &w) in rule.nodes.iter().zip(&rule.weights) {
                let v = probability_fn(t, p, &m.shifted(eps));
                mean.add(w * v);
                if is_mc {
                    sq.add(v * v);
                }
            }
            let mu = mean.sum();
            let se = if is_mc {
                let var = (sq.sum() / n - mu * mu).max(0.0) * n / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            (mu, se)
        })
        .unzip();

    let width = noise.macroscopic_width();
    let mut flags = p.regime_flags(m);
    if width > 0.0 {
        flags |= RegimeFlags::for_macro_average(width, grid.times()[0]);
    }
    Ok((ProbabilityTrace::new(grid, values, flags)?, errors))
}

/// Exact macroscopic average of `sin^2(phi + phi_m / 2)` with the midpoint phase model.
///
/// Writing `2 phi = x sin(theta)`, the Jacobi-Anger expansion turns the average over the
/// offset into a Bessel series whose harmonics are damped by the characteristic function
/// of the offset distribution. For `sigma t >> 1` only the `J0` term survives.
pub fn series_average_probability(t: f64, p: &ProtocolParams, m: &MicroNoise, noise: &NoiseModel) -> Result<f64> {
    let (center, damping): (f64, Box<dyn Fn(f64) -> f64>) = match *noise {
        NoiseModel::None => (0.0, Box::new(|_| 1.0)),
        NoiseModel::GaussianMacroscopic { sigma } => {
            let s2t2 = sigma * sigma * t * t;
            (0.0, Box::new(move |k: f64| (-0.5 * k * k * s2t2).exp()))
        }
        NoiseModel::UniformMacroscopic { half_width } => (0.0, Box::new(move |k: f64| sinc(k * half_width * t))),
        NoiseModel::UniformOffset { half_width, center } => {
            (center, Box::new(move |k: f64| sinc(k * half_width * t)))
        }
        NoiseModel::OrnsteinUhlenbeck { .. } => {
            return Err(Error::invalid("series average applies to static offsets only"))
        }
    };
    let amp = 2.0 * p.g * p.tau * sinc(m.delta_width * t) * ((0.5 * p.beat() * t).cos() + 0.5 * p.alpha);
    let x = 2.0 * amp;
    let wbar = p.mean_frequency() + m.epsilon0 + center;
    let theta = wbar * t;

    let ax = x.abs();
    let bessel_cut = (ax + 10.0 * ax.cbrt() + 25.0).ceil() as usize;
    // Harmonic index at which the damping drops below 1e-18.
    let mut nmax = 0usize;
    while nmax < bessel_cut && damping(nmax as f64 + 1.0).abs() > 1e-18 {
        nmax += 1;
    }
    let (e_cos, e_sin) = if nmax == 0 {
        (bessel::j0(x), 0.0)
    } else {
        let j = bessel::jn_all(nmax, x);
        let mut c = NeumaierSum::default();
        let mut s = NeumaierSum::default();
        c.add(j[0]);
        for (n, jn) in j.iter().enumerate().skip(1) {
            let nf = n as f64;
            let d = damping(nf);
            if n % 2 == 0 {
                c.add(2.0 * jn * (nf * theta).cos() * d);
            } else {
                s.add(2.0 * jn * (nf * theta).sin() * d);
            }
        }
        (c.sum(), s.sum())
    };
    let v = 0.5 * (1.0 - p.phi_m.cos() * e_cos + p.phi_m.sin() * e_sin);
    Ok(v.clamp(0.0, 1.0))
}

/// Exact-series macroscopic average on a whole grid.
pub fn series_average_trace(
    grid: &TimeGrid,
    p: &ProtocolParams,
    m: &MicroNoise,
    noise: &NoiseModel,
) -> Result<ProbabilityTrace> {
    p.validate()?;
    m.validate()?;
    noise.validate()?;
    let values = grid
        .times()
        .par_iter()
        .map(|&t| series_average_probability(t, p, m, noise))
        .collect::<Result<Vec<f64>>>()?;
    let mut flags = p.regime_flags(m);
    let width = noise.macroscopic_width();
    if width > 0.0 {
        flags |= RegimeFlags::for_macro_average(width, grid.times()[0]);
    }
    ProbabilityTrace::new(grid, values, flags)
}

/// Ornstein-Uhlenbeck frequency noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuProcess {
    pub correlation_time: f64,
    pub diffusion: f64,
}

impl OuProcess {
    pub fn new(correlation_time: f64, diffusion: f64) -> Result<Self> {
        ensure(correlation_time.is_finite() && correlation_time > 0.0, || {
            "correlation_time must be positive".into()
        })?;
        ensure(diffusion.is_finite() && diffusion >= 0.0, || "diffusion must be non-negative".into())?;
        Ok(Self {
            correlation_time,
            diffusion,
        })
    }

    /// `sigma_t^2 tau_t / 2`.
    pub fn stationary_variance(&self) -> f64 {
        0.5 * self.diffusion * self.diffusion * self.correlation_time
    }

    /// Decay factor and innovation standard deviation for one step `dt`.
    fn step_coefficients(&self, dt: f64) -> (f64, f64) {
        let decay = (-dt / self.correlation_time).exp();
        let var = self.stationary_variance() * -(-2.0 * dt / self.correlation_time).exp_m1();
        (decay, var.sqrt())
    }
}

/// How the first sample of a path is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuStart {
    Stationary,
    Fixed(f64),
}

/// One realisation of a time-dependent offset and its accumulated phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub times: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// `int_0^t eps dt'`, accumulated with the trapezoid rule; `theta[0] = 0`.
    pub theta: Vec<f64>,
}

impl NoisePath {
    /// Path with constant offset `eps`, so `theta = eps (t - t0)` exactly.
    pub fn constant_drift(eps: f64, grid: &TimeGrid) -> Self {
        let t0 = grid.times()[0];
        Self {
            times: grid.times().to_vec(),
            epsilon: vec![eps; grid.len()],
            theta: grid.times().iter().map(|t| eps * (t - t0)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.times.len() == self.epsilon.len() && self.times.len() == self.theta.len(),
            || "path arrays differ in length".into(),
        )?;
        ensure(self.times.len() >= 2, || "path needs at least two samples".into())?;
        ensure(self.theta[0] == 0.0, || "path phase must start at zero".into())?;
        ensure(self.times.windows(2).all(|w| w[1] > w[0]), || {
            "path times must be strictly increasing".into()
        })
    }

    /// Linear interpolation of `theta` at `t` given the segment index `j` with `times[j] <= t`.
    fn theta_at(&self, j: usize, t: f64) -> f64 {
        let j = j.min(self.times.len() - 2);
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let w = (t - t0) / (t1 - t0);
        self.theta[j] + w * (self.theta[j + 1] - self.theta[j])
    }
}

/// Samples an OU path on `grid`, starting from the stationary distribution.
pub fn sample_ou_path(correlation_time: f64, diffusion: f64, grid: &TimeGrid, seed: u64) -> Result<NoisePath> {
    sample_ou_path_from(&OuProcess::new(correlation_time, diffusion)?, grid, OuStart::Stationary, seed)
}

pub fn sample_ou_path_from(process: &OuProcess, grid: &TimeGrid, start: OuStart, seed: u64) -> Result<NoisePath> {
    let times = grid.times();
    let mut rng = seed::rng_for(seed, "ou-path", 0);
    let mut epsilon = Vec::with_capacity(times.len());
    let mut theta = Vec::with_capacity(times.len());
    let mut eps = match start {
        OuStart::Stationary => process.stationary_variance().sqrt() * rng.sample::<f64, _>(StandardNormal),
        OuStart::Fixed(e) => e,
    };
    let mut th = 0.0;
    epsilon.push(eps);
    theta.push(th);
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let (decay, sd) = process.step_coefficients(dt);
        let next = eps * decay + sd * rng.sample::<f64, _>(StandardNormal);
        th += 0.5 * (eps + next) * dt;
        eps = next;
        epsilon.push(eps);
        theta.push(th);
    }
    Ok(NoisePath { times: times.to_vec(), epsilon, theta })
}

/// `int_a^b sin(psi(t)) dt` for `psi` linear between `psi(a) = pa` and `psi(b) = pb`.
#[inline]
fn sin_integral_linear(h: f64, pa: f64, pb: f64) -> f64 {
    h * (0.5 * (pa + pb)).sin() * sinc(0.5 * (pb - pa))
}

/// Angular frequencies and weights of the driven lines (including the amplification term).
fn lines(p: &ProtocolParams) -> Vec<(f64, f64)> {
    let mut v = vec![(p.delta1, 1.0), (p.delta2, 1.0)];
    if p.alpha != 0.0 {
        v.push((p.mean_frequency(), p.alpha));
    }
    v
}

/// Single-path trace under a time-dependent offset.
///
/// Each shot integrates `g sum_i sin(delta_i t' + theta(t'))` over `[t - tau/2, t + tau/2]`
/// with `theta` linearly interpolated on the path grid; every linear piece is integrated in
/// closed form, so the only discretisation is the interpolation of `theta` itself.
pub fn evolve_time_dependent(path: &NoisePath, p: &ProtocolParams, grid: &TimeGrid) -> Result<ProbabilityTrace> {
    path.validate()?;
    p.validate()?;
    let half = 0.5 * p.tau;
    let (lo, hi) = (path.times[0], *path.times.last().unwrap());
    let slack = 1e-9 * p.tau;
    let lines = lines(p);
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        let (a, b) = (t - half, t + half);
        if a < lo - slack || b > hi + slack {
            return Err(Error::invalid(format!(
                "noise path covers [{lo}, {hi}] but shot at t = {t} needs [{a}, {b}]"
            )));
        }
        let a = a.max(lo);
        let b = b.min(hi);
        // First grid index strictly after a.
        let mut j = path.times.partition_point(|&x| x <= a);
        let mut ta = a;
        let mut tha = path.theta_at(j.saturating_sub(1), a);
        let mut acc = NeumaierSum::default();
        loop {
            let tb = if j < path.times.len() && path.times[j] < b { path.times[j] } else { b };
            let thb = if tb == b { path.theta_at(j.saturating_sub(1), b) } else { path.theta[j] };
            let h = tb - ta;
            if h > 0.0 {
                for &(w, amp) in &lines {
                    acc.add(amp * sin_integral_linear(h, w * ta + tha, w * tb + thb));
                }
            }
            if tb >= b {
                break;
            }
            ta = tb;
            tha = thb;
            j += 1;
        }
        values.push((p.g * acc.sum() + 0.5 * p.phi_m).sin().powi(2));
    }
    ProbabilityTrace::new(grid, values, p.regime_flags(&MicroNoise::default()))
}

/// Even number of OU sub-steps per shot: at least 64 and at least 20 per correlation time.
pub fn default_sub_steps(tau: f64, correlation_time: f64) -> usize {
    let m = (20.0 * tau / correlation_time).ceil().max(64.0) as usize;
    m + m % 2
}

/// Shot-by-shot trace for one OU realisation, sampled and integrated in a single pass.
///
/// Equivalent to sampling on the grid `k tau / sub_steps` from 0 and calling
/// [`evolve_time_dependent`], without storing the path.
pub fn ou_shot_trace(process: &OuProcess, p: &ProtocolParams, sub_steps: usize, seed: u64) -> Result<ProbabilityTrace> {
    p.validate()?;
    ensure(sub_steps >= 2 && sub_steps % 2 == 0, || "sub_steps must be even and at least 2".into())?;
    let grid = TimeGrid::shots(p.tau, p.n_shots)?;
    let dt = p.tau / sub_steps as f64;
    let (decay, sd) = process.step_coefficients(dt);
    let lines = lines(p);
    let mut rng = seed::rng_for(seed, "ou-path", 0);
    let mut eps = process.stationary_variance().sqrt() * rng.sample::<f64, _>(StandardNormal);
    let mut theta = 0.0;
    let mut k: usize = 0;

    let mut step = |k: &mut usize, eps: &mut f64, theta: &mut f64| -> (f64, f64, f64, f64) {
        let ta = *k as f64 * dt;
        let tha = *theta;
        let next = *eps * decay + sd * rng.sample::<f64, _>(StandardNormal);
        *theta += 0.5 * (*eps + next) * dt;
        *eps = next;
        *k += 1;
        (ta, *k as f64 * dt, tha, *theta)
    };

    // Advance to the start of the first window at tau / 2.
    for _ in 0..sub_steps / 2 {
        step(&mut k, &mut eps, &mut theta);
    }
    let mut values = Vec::with_capacity(p.n_shots);
    for _ in 0..p.n_shots {
        let mut acc = NeumaierSum::default();
        for _ in 0..sub_steps {
            let (ta, tb, tha, thb) = step(&mut k, &mut eps, &mut theta);
            for &(w, amp) in &lines {
                acc.add(amp * sin_integral_linear(tb - ta, w * ta + tha, w * tb + thb));
            }
        }
        values.push((p.g * acc.sum() + 0.5 * p.phi_m).sin().powi(2));
    }
    ProbabilityTrace::new(&grid, values, p.regime_flags(&MicroNoise::default()))
}

/// Mean trace over `n_paths` independent OU realisations (member seeds derived from `seed`).
pub fn ou_ensemble_trace(
    process: &OuProcess,
    p: &ProtocolParams,
    n_paths: usize,
    sub_steps: usize,
    seed: u64,
) -> Result<ProbabilityTrace> {
    ensure(n_paths >= 1, || "need at least one path".into())?;
    let traces = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| ou_shot_trace(process, p, sub_steps, seed::derive_seed(seed, "ou-ensemble", i)))
        .collect::<Result<Vec<_>>>()?;
    ProbabilityTrace::mean(&traces)
}

/// Weak-coupling beat coefficient of a static Gaussian offset ensemble:
/// `g^2 tau^2 E[sinc((delta1 + eps) tau / 2) sinc((delta2 + eps) tau / 2)]`.
pub fn static_ensemble_beat_amplitude(g: f64, tau: f64, delta1: f64, delta2: f64, sigma: f64) -> f64 {
    let h = 0.5 * tau;
    let f = |e: f64| sinc((delta1 + e) * h) * sinc((delta2 + e) * h);
    let mean = if sigma == 0.0 {
        f(0.0)
    } else {
        let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
        let (v, _) = adaptive_gk(
            |e| f(e) * norm * (-0.5 * (e / sigma).powi(2)).exp(),
            -12.0 * sigma,
            12.0 * sigma,
            1e-13,
        );
        v
    };
    g * g * tau * tau * mean
}

/// Proportionality constant of the large-`sigma tau` beat amplitude, fitted against
/// [`static_ensemble_beat_amplitude`] over a `(g, tau, sigma)` grid and frozen.
pub const DECAY_CONSTANT: f64 = 1.5708;

/// `DECAY_CONSTANT * 4 g^2 tau / (sqrt(2 pi) sigma)`; flagged when `sigma tau` is not large.
pub fn beat_amplitude_decay_prediction(g: f64, tau: f64, sigma: f64) -> Result<Flagged<f64>> {
    ensure(sigma.is_finite() && sigma > 0.0, || "sigma must be positive".into())?;
    ensure(tau.is_finite() && tau > 0.0, || "tau must be positive".into())?;
    let value = DECAY_CONSTANT * 4.0 * g * g * tau / ((2.0 * PI).sqrt() * sigma);
    Ok(Flagged {
        value,
        flags: RegimeFlags::for_macro_average(sigma, tau),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{measurement_probability, windowed_phase};

    fn weak() -> ProtocolParams {
        ProtocolParams {
            g: 1e-2,
            tau: 5e-3,
            delta1: 100.0,
            delta2: 99.0,
            n_shots: 64,
            ..Default::default()
        }
    }

    #[test]
    fn none_model_is_pointwise() {
        let p = weak();
        let m = MicroNoise::default();
        let grid = TimeGrid::shots(p.tau, 32).unwrap();
        let f = |t: f64, p: &ProtocolParams, m: &MicroNoise| measurement_probability(windowed_phase(t, p, m), p.phi_m);
        let tr = average_over_macroscopic(f, &NoiseModel::None, &EnsembleSpec::quadrature(16), &grid, &p, &m).unwrap();
        for (t, v) in grid.times().iter().zip(&tr.values) {
            assert_eq!(*v, f(*t, &p, &m));
        }
    }

    #[test]
    fn rejects_time_dependent_model_and_bad_specs() {
        let p = weak();
        let m = MicroNoise::default();
        let grid = TimeGrid::shots(p.tau, 4).unwrap();
        let f = |_: f64, _: &ProtocolParams, _: &MicroNoise| 0.5;
        let ou = NoiseModel::OrnsteinUhlenbeck {
            correlation_time: 1.0,
            diffusion: 1.0,
            seed: 1,
        };
        assert!(average_over_macroscopic(f, &ou, &EnsembleSpec::quadrature(16), &grid, &p, &m).is_err());
        let g = NoiseModel::GaussianMacroscopic { sigma: 1.0 };
        assert!(average_over_macroscopic(f, &g, &EnsembleSpec::quadrature(4), &grid, &p, &m).is_err());
        assert!(average_over_macroscopic(f, &g, &EnsembleSpec::monte_carlo(10, 1), &grid, &p, &m).is_err());
    }

    #[test]
    fn series_matches_quadrature_at_short_times() {
        let p = ProtocolParams {
            g: 30.0,
            tau: 5e-3,
            delta1: 100.0,
            delta2: 99.0,
            phi_m: 0.7,
            alpha: 0.5,
            n_shots: 10,
        };
        let m = MicroNoise::new(0.01, 0.2);
        let noise = NoiseModel::GaussianMacroscopic { sigma: 1.0 };
        let grid = TimeGrid::uniform(0.0, 0.05, 20).unwrap();
        let f = |t: f64, p: &ProtocolParams, m: &MicroNoise| crate::signal::sensor_probability(t, p, m);
        let q = average_over_macroscopic(f, &noise, &EnsembleSpec::quadrature(96), &grid, &p, &m).unwrap();
        let s = series_average_trace(&grid, &p, &m, &noise).unwrap();
        for (a, b) in q.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let u = NoiseModel::UniformMacroscopic { half_width: 1.5 };
        let q = average_over_macroscopic(f, &u, &EnsembleSpec::quadrature(96), &grid, &p, &m).unwrap();
        let s = series_average_trace(&grid, &p, &m, &u).unwrap();
        for (a, b) in q.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn ou_step_matches_stationary_variance() {
        let ou = OuProcess::new(2.0, 3.0).unwrap();
        assert_eq!(ou.stationary_variance(), 9.0);
        let (d, sd) = ou.step_coefficients(0.5);
        assert!((d * d * 9.0 + sd * sd - 9.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_ou_path_without_diffusion() {
        let grid = TimeGrid::uniform(0.0, 0.01, 501).unwrap();
        let ou = OuProcess::new(1.5, 0.0).unwrap();
        let path = sample_ou_path_from(&ou, &grid, OuStart::Fixed(2.0), 9).unwrap();
        for (t, e) in path.times.iter().zip(&path.epsilon) {
            assert!((e - 2.0 * (-t / 1.5).exp()).abs() < 1e-12);
        }
        let t_end = *path.times.last().unwrap();
        let exact = 2.0 * 1.5 * (1.0 - (-t_end / 1.5).exp());
        assert!((path.theta.last().unwrap() - exact).abs() < 1e-4);
        let zero = sample_ou_path_from(&ou, &grid, OuStart::Fixed(0.0), 9).unwrap();
        assert!(zero.theta.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_monotone_grid_is_rejected() {
        assert!(TimeGrid::from_times(vec![0.0, 0.2, 0.1]).is_err());
        let bad = NoisePath {
            times: vec![0.0, 0.2, 0.1],
            epsilon: vec![0.0; 3],
            theta: vec![0.0; 3],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fused_ou_trace_matches_stored_path() {
        let p = ProtocolParams { n_shots: 20, ..weak() };
        let ou = OuProcess::new(p.tau * 0.7, 1e4).unwrap();
        let m = default_sub_steps(p.tau, ou.correlation_time);
        let seed = 77;
        let fused = ou_shot_trace(&ou, &p, m, seed).unwrap();
        let n_pts = (p.n_shots + 1) * m + 1;
        let path_grid = TimeGrid::from_times((0..n_pts).map(|k| k as f64 * p.tau / m as f64).collect()).unwrap();
        let path = sample_ou_path_from(&ou, &path_grid, OuStart::Stationary, seed).unwrap();
        let shots = TimeGrid::shots(p.tau, p.n_shots).unwrap();
        let stored = evolve_time_dependent(&path, &p, &shots).unwrap();
        for (a, b) in fused.values.iter().zip(&stored.values) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn window_outside_path_is_rejected() {
        let p = weak();
        let path_grid = TimeGrid::uniform(0.0, p.tau / 8.0, 40).unwrap();
        let path = NoisePath::constant_drift(0.0, &path_grid);
        let shots = TimeGrid::shots(p.tau, 10).unwrap();
        assert!(evolve_time_dependent(&path, &p, &shots).is_err());
    }

    #[test]
    fn decay_prediction_scaling() {
        let a = beat_amplitude_decay_prediction(1.0, 0.01, 100.0).unwrap().value;
        let b = beat_amplitude_decay_prediction(1.0, 0.01, 200.0).unwrap().value;
        let c = beat_amplitude_decay_prediction(2.0, 0.01, 100.0).unwrap().value;
        assert!((a / b - 2.0).abs() < 1e-14);
        assert!((c / a - 4.0).abs() < 1e-14);
        assert!(beat_amplitude_decay_prediction(1.0, 0.01, 0.0).is_err());
    }
}
