//! Time grids and sampled probability traces.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::signal::RegimeFlags;

/// Strictly increasing evaluation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// Shot centres `t_n = n tau` for `n = 1..=n_shots`.
    pub fn shots(tau: f64, n_shots: usize) -> Result<Self> {
        ensure(tau > 0.0 && tau.is_finite(), || "tau must be positive".into())?;
        ensure(n_shots >= 1, || "n_shots must be at least 1".into())?;
        Ok(Self {
            times: (1..=n_shots).map(|n| n as f64 * tau).collect(),
        })
    }

    /// `start + k step` for `k = 0..n`.
    pub fn uniform(start: f64, step: f64, n: usize) -> Result<Self> {
        ensure(step > 0.0 && step.is_finite(), || "grid step must be positive".into())?;
        ensure(n >= 1, || "grid must not be empty".into())?;
        Ok(Self {
            times: (0..n).map(|k| start + k as f64 * step).collect(),
        })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        ensure(!times.is_empty(), || "grid must not be empty".into())?;
        ensure(times.iter().all(|t| t.is_finite()), || "grid times must be finite".into())?;
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "grid must be strictly increasing (index {} -> {})",
                i,
                i + 1
            )));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Common spacing if the grid is uniform to a relative `1e-9`.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let n = self.times.len() - 1;
        let step = (self.times[n] - self.times[0]) / n as f64;
        let ok = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1e-300) + 1e-12 * w[1].abs());
        ok.then_some(step)
    }
}

/// Readout probabilities sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTrace {
    /// Spacing between samples (the shot duration for shot-by-shot traces).
    pub sample_interval: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Union of regime warnings raised while producing the values.
    pub flags: RegimeFlags,
}

impl ProbabilityTrace {
    /// Builds a trace and checks the uniform-sampling and probability-range invariants.
    pub fn new(grid: &TimeGrid, values: Vec<f64>, flags: RegimeFlags) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invariant(format!(
                "trace has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -1e-12 || **v > 1.0 + 1e-12)
        {
            return Err(Error::invariant(format!("probability {v} at index {i} is outside [0, 1]")));
        }
        let sample_interval = match grid.len() {
            1 => 0.0,
            _ => grid
                .uniform_step()
                .ok_or_else(|| Error::invalid("trace grid must be uniformly spaced"))?,
        };
        Ok(Self {
            sample_interval,
            times: grid.times().to_vec(),
            values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            flags,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &ProbabilityTrace) -> bool {
        self.times == other.times
    }

    /// Pointwise mean of traces sharing one grid.
    pub fn mean(traces: &[ProbabilityTrace]) -> Result<ProbabilityTrace> {
        let first = traces.first().ok_or_else(|| Error::invalid("need at least one trace"))?;
        if traces.iter().any(|t| !t.same_grid(first)) {
            return Err(Error::invalid("traces are sampled on different grids"));
        }
        let n = traces.len() as f64;
        let mut values = vec![crate::quadrature::NeumaierSum::default(); first.len()];
        let mut flags = RegimeFlags::empty();
        for tr in traces {
            flags |= tr.flags;
            for (acc, v) in values.iter_mut().zip(&tr.values) {
                acc.add(*v);
            }
        }
        Ok(ProbabilityTrace {
            sample_interval: first.sample_interval,
            times: first.times.clone(),
            values: values.iter().map(|s| s.sum() / n).collect(),
            flags,
        })
    }
}
