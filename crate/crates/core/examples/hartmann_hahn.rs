//! The flip-flop readout depends only on the line splitting, so a common frequency shift
//! leaves it untouched while the sensing readout moves.
//!
//! cargo run --release --example hartmann_hahn

use nvnmr::quantum::{twospin_probabilities, Basis, TwoSpinHamiltonian};
use nvnmr::signal::{hartmann_hahn_probability, ProtocolParams};

fn main() -> nvnmr::Result<()> {
    let (g, tau, d1, d2) = (0.4, 0.5, 3.0, 2.6);
    println!("{:>6} {:>8} {:>12} {:>12} {:>12}", "t", "shift", "flip-flop", "sensing", "semiclass.");
    for (t, shift) in [(1.0, 0.0), (1.0, 0.37), (1.0, -5.0), (4.2, 0.0), (4.2, 2.5)] {
        let ff = twospin_probabilities(g, tau, d1 + shift, d2 + shift, t, TwoSpinHamiltonian::FlipFlop, Basis::Z)?;
        let se = twospin_probabilities(g, tau, d1 + shift, d2 + shift, t, TwoSpinHamiltonian::Sensing, Basis::Z)?;
        let p = ProtocolParams {
            g,
            tau,
            delta1: d1 + shift,
            delta2: d2 + shift,
            ..Default::default()
        };
        let hh = hartmann_hahn_probability(t, &p).value;
        println!("{t:>6} {shift:>8} {ff:>12.9} {se:>12.9} {hh:>12.9}");
    }
    Ok(())
}
