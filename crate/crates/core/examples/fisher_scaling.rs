//! How the information about the line splitting grows with shot count and interaction
//! time: N^3 tau^4 at weak coupling, a slower tau power once the phase saturates.
//!
//! cargo run --release --example fisher_scaling

use nvnmr::fisher::{fisher_matrix_two_params, fit_scaling, FisherScenario, Readout};

fn main() -> nvnmr::Result<()> {
    let weak = FisherScenario {
        readout: Readout::SensingX,
        g1: 1.0,
        g2: 1.0,
        tau: 1e-2,
        omega_s: 100.0,
        omega_r: 40.0,
        noisy_omega_s: false,
        delta_width: 0.0,
    };
    let n = [1000, 2000, 5000, 10_000];
    let fit = fit_scaling(&weak, &n, &[1e-3, 2e-3, 5e-3, 1e-2])?;
    println!(
        "weak: N^{:.3} tau^{:.3}, prefactor {:.4} (g^2/3 = {:.4})",
        fit.n_exponent,
        fit.tau_exponent,
        fit.prefactor,
        1.0 / 3.0
    );

    let strong = FisherScenario {
        tau: 100.0,
        omega_r: 4e-3,
        noisy_omega_s: true,
        ..weak
    };
    let fit = fit_scaling(&strong, &n, &[10.0, 20.0, 50.0, 100.0])?;
    println!("strong, noisy mean frequency: N^{:.3} tau^{:.3}", fit.n_exponent, fit.tau_exponent);

    let m = fisher_matrix_two_params(1.0, 0.5, 1e-2, 1000)?;
    println!("two-parameter matrix {:?}, I_r = {:.4e}", m.matrix, m.i_r);
    Ok(())
}
