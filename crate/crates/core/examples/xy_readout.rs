//! Two nuclei seen through the collective phase. Reading along the preparation axis (X)
//! puts a line at the splitting; the orthogonal axis (Y) shows the Larmor lines themselves.
//!
//! cargo run --release --example xy_readout

use std::f64::consts::PI;

use nvnmr::quantum::{multinucleus_readout, Basis, NucleusSpec};
use nvnmr::signal::RegimeFlags;
use nvnmr::spectral::{compute_spectrum, find_peaks, Window};
use nvnmr::trace::{ProbabilityTrace, TimeGrid};

fn main() -> nvnmr::Result<()> {
    // Microsecond units.
    let (w1, w2) = (2.0 * PI * 0.71, 2.0 * PI * 0.71126);
    let g = 2.0 * PI * 1e-3;
    let tau = 8.0 * PI / w1;
    let spec = NucleusSpec::new(vec![g, g], vec![w1, w2])?;
    let grid = TimeGrid::uniform(0.25, 0.25, 32_000)?;

    for basis in [Basis::X, Basis::Y] {
        let values = grid
            .times()
            .iter()
            .map(|&t| multinucleus_readout(&spec, tau, t, basis).map(|v| v.value))
            .collect::<nvnmr::Result<Vec<_>>>()?;
        let trace = ProbabilityTrace::new(&grid, values, RegimeFlags::empty())?;
        let s = compute_spectrum(&trace, Window::Hann, true)?;
        let report = find_peaks(&s, w1 - w2, 3);
        println!("{basis:?} readout:");
        for pk in &report.peaks {
            println!("  omega {:.5}  |X| {:.3e}", pk.frequency, pk.magnitude);
        }
    }
    println!("splitting {:.5}, larmor {:.5} / {:.5}", w2 - w1, w1, w2);
    Ok(())
}
