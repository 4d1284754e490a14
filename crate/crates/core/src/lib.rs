//! Simulation and analysis of NV-centre NMR readout protocols under field inhomogeneity.
//!
//! The crate models how a repeated-readout sensor sees two close nuclear lines, how static
//! and time-dependent frequency offsets wash the signal out, and why a readout along the
//! preparation axis keeps the beat note between the lines while an orthogonal readout and
//! a classical pickup coil lose it. Around that sit FFT analysis, Fisher-information
//! accounting and exact few-spin quantum checks. See `examples/` for runnable entry points.

pub mod bessel;
pub mod error;
pub mod experiment;
pub mod fisher;
pub mod noise;
pub mod quadrature;
pub mod quantum;
pub mod seed;
pub mod signal;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};
