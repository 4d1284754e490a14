//! Amplifying with a reference field at the mean frequency: the half-beat line grows
//! linearly in the reference strength until the phase stops being small.
//!
//! cargo run --release --example amplification_sweep

use nvnmr::noise::{series_average_trace, NoiseModel};
use nvnmr::signal::{MicroNoise, ProtocolParams};
use nvnmr::spectral::{compute_spectrum, detect_harmonics, Window};
use nvnmr::trace::TimeGrid;

fn main() -> nvnmr::Result<()> {
    let base = ProtocolParams {
        g: 1.0,
        tau: 5e-3,
        delta1: 100.0,
        delta2: 99.0,
        n_shots: 10_000,
        ..Default::default()
    };
    let noise = NoiseModel::GaussianMacroscopic { sigma: 0.1 };
    let grid = TimeGrid::shots(base.tau, base.n_shots)?;

    println!("{:>8} {:>12} {:>9} {:>12} {:>9}", "alpha", "|half beat|", "quality", "|beat|", "quality");
    for alpha in [0.0, 1.0, 2.0, 4.0, 8.0, 2000.0] {
        let p = ProtocolParams { alpha, ..base };
        let trace = series_average_trace(&grid, &p, &MicroNoise::default(), &noise)?;
        let spec = compute_spectrum(&trace, Window::Rectangular, true)?;
        let r = detect_harmonics(&spec, p.beat().abs(), 1)?;
        let (h, b) = (r.harmonic(0.5).unwrap(), r.harmonic(1.0).unwrap());
        println!(
            "{alpha:>8} {:>12.4e} {:>9.1} {:>12.4e} {:>9.2}",
            h.magnitude, h.quality, b.magnitude, b.quality
        );
    }
    Ok(())
}
