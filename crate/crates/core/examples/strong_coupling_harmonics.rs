//! Same spread at a thousand times the coupling: the phase is no longer small and the beat
//! picks up harmonics. Compares the exact average with the large-spread Bessel form.
//!
//! cargo run --release --example strong_coupling_harmonics

use nvnmr::noise::{series_average_trace, NoiseModel};
use nvnmr::signal::{strong_coupling_probability, MicroNoise, ProtocolParams};
use nvnmr::spectral::{compute_spectrum, detect_harmonics, Window};
use nvnmr::trace::TimeGrid;

fn main() -> nvnmr::Result<()> {
    let p = ProtocolParams {
        g: 1e3,
        tau: 5e-3,
        delta1: 100.0,
        delta2: 100.01,
        n_shots: 1_000_000,
        ..Default::default()
    };
    let micro = MicroNoise::new(1e-6, 0.0);
    let noise = NoiseModel::GaussianMacroscopic { sigma: 1.0 };
    let grid = TimeGrid::shots(p.tau, p.n_shots)?;
    let trace = series_average_trace(&grid, &p, &micro, &noise)?;

    // Past a few 1/sigma only the J0 term is left.
    let worst = trace
        .times
        .iter()
        .zip(&trace.values)
        .skip(2000)
        .map(|(&t, &v)| (v - strong_coupling_probability(t, &p, &micro)).abs())
        .fold(0.0, f64::max);
    println!("max |exact - J0 form| after t = 10: {worst:.2e}");

    let spec = compute_spectrum(&trace, Window::Rectangular, true)?;
    let report = detect_harmonics(&spec, p.beat().abs(), 6)?;
    let fundamental = report.harmonic(1.0).map_or(0.0, |h| h.magnitude);
    for h in report.harmonics.iter().filter(|h| h.order >= 1.0) {
        println!(
            "order {}: |X| {:.3e} ({:.1}% of fundamental)",
            h.order,
            h.magnitude,
            100.0 * h.magnitude / fundamental
        );
    }
    Ok(())
}
