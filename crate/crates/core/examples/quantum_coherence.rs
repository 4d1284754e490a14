//! Sensor coherence after coupling to N nuclei: closed form, exact state-vector evolution,
//! and the large-N exponential it approaches at fixed N g tau.
//!
//! cargo run --release --example quantum_coherence

use nvnmr::quantum::{coherence_closed_form, exact_coherence, semiclassical_coherence};

fn main() -> nvnmr::Result<()> {
    let (tau, delta, t) = (1.0, 1.3, 0.8);
    for n in 1..=4u32 {
        let g = 0.3;
        let a = coherence_closed_form(n, g, tau, delta, t);
        let b = exact_coherence(n as usize, g, tau, delta, t)?;
        println!("N = {n}: closed {a:.10}  exact {b:.10}  |diff| {:.1e}", (a - b).norm());
    }
    let ngt = 0.5;
    for n in [10u32, 20, 40, 80, 160] {
        let g = ngt / n as f64;
        let err = (coherence_closed_form(n, g, tau, delta, t) - semiclassical_coherence(n, g, tau, delta, t)).norm();
        println!("N = {n:>3}: distance to exponential form {err:.3e}");
    }
    Ok(())
}
