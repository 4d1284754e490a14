//! Weak coupling under a broad static field spread: the averaged x-readout keeps only the
//! beat between the two lines.
//!
//! cargo run --release --example weak_coupling_beat

use nvnmr::noise::{series_average_trace, NoiseModel};
use nvnmr::signal::{MicroNoise, ProtocolParams};
use nvnmr::spectral::{compute_spectrum, detect_harmonics, Window};
use nvnmr::trace::TimeGrid;

fn main() -> nvnmr::Result<()> {
    let p = ProtocolParams {
        g: 1.0,
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
    let spec = compute_spectrum(&trace, Window::Rectangular, true)?;
    let report = detect_harmonics(&spec, p.beat().abs(), 4)?;

    println!("flags: {:?}", trace.flags.names());
    println!("bin width {:.3e}, expected beat {:.3e}", spec.bin_width(), p.beat().abs());
    for h in &report.harmonics {
        println!(
            "order {:>3}: omega {:.5e}  |X| {:.3e}  quality {:>10.1}  present {}",
            h.order, h.frequency, h.magnitude, h.quality, h.present
        );
    }
    Ok(())
}
