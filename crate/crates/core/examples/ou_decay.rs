//! Time-dependent (Ornstein-Uhlenbeck) field noise: the beat amplitude shrinks as the
//! correlation time grows at fixed diffusion, roughly as tau_t^(-1/2), and approaches the
//! static ensemble of equal variance once the noise is slow.
//!
//! cargo run --release --example ou_decay

use nvnmr::noise::{default_sub_steps, ou_ensemble_trace, static_ensemble_beat_amplitude, OuProcess};
use nvnmr::signal::ProtocolParams;
use nvnmr::spectral::beat_amplitude;

fn main() -> nvnmr::Result<()> {
    let p = ProtocolParams {
        g: 1e-2,
        tau: 5e-3,
        delta1: 100.0,
        delta2: 99.0,
        n_shots: 10_000,
        ..Default::default()
    };
    let diffusion = 1e5;
    let paths = 48;
    println!("{:>8} {:>10} {:>12} {:>12} {:>7}", "tau_t/tau", "sigma", "OU", "static", "ratio");
    for ratio in [0.1, 1.0, 10.0, 100.0] {
        let process = OuProcess::new(ratio * p.tau, diffusion)?;
        let steps = default_sub_steps(p.tau, process.correlation_time);
        let trace = ou_ensemble_trace(&process, &p, paths, steps, 7)?;
        let ou = beat_amplitude(&[trace], p.beat().abs())?;
        let sigma = process.stationary_variance().sqrt();
        let stat = static_ensemble_beat_amplitude(p.g, p.tau, p.delta1, p.delta2, sigma);
        println!("{ratio:>8} {sigma:>10.1} {ou:>12.4e} {stat:>12.4e} {:>7.3}", ou / stat);
    }
    Ok(())
}
