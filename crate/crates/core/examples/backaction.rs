//! Repeated readout disturbs the nuclei. With the sensing coupling the nuclear state loses
//! purity; with the flip-flop coupling the sensor stays pure but the nuclei drift toward a
//! polarized state that carries no signal.
//!
//! cargo run --release --example backaction

use nvnmr::quantum::{evolve_exact, Basis, ExactProtocol, NucleusSpec, ResetMode, SpinEnsembleState, TwoSpinHamiltonian};

fn main() -> nvnmr::Result<()> {
    let spec = NucleusSpec::new(vec![1.0, 1.0], vec![4.46, 4.47])?;
    let state = SpinEnsembleState::polarized(2)?;
    for (h, readout) in [
        (TwoSpinHamiltonian::Sensing, Basis::X),
        (TwoSpinHamiltonian::FlipFlop, Basis::Z),
    ] {
        let protocol = ExactProtocol {
            hamiltonian: h,
            g_global: 6.3e-3,
            tau: 5.6,
            sample_interval: 0.25,
            shots: 4000,
            readout,
            reset: ResetMode::Deterministic,
            frequency_shifts: None,
            coevolve: false,
        };
        let tr = evolve_exact(&state, &spec, &protocol)?;
        println!("{h:?}:");
        for k in [0, 999, 1999, 3999] {
            println!(
                "  shot {:>4}: P {:.5}  sensor purity {:.8}  nuclear purity {:.5}  sum <Z> {:+.5}",
                k + 1,
                tr.probabilities[k],
                tr.sensor_purity[k],
                tr.nuclear_purity[k],
                tr.polarization[k]
            );
        }
    }
    Ok(())
}
