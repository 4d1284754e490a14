//! A pickup coil integrates the field of the whole sample, so a macroscopic spread kills
//! its signal after ~1/sigma. The sensor's x-readout average keeps a beat long after that.
//!
//! cargo run --release --example coil_vs_nv

use nvnmr::noise::{series_average_probability, NoiseModel};
use nvnmr::signal::{classical_coil_signal, MicroNoise, ProtocolParams};

fn main() -> nvnmr::Result<()> {
    let sigma = 1.0;
    let p = ProtocolParams {
        g: 1.0,
        tau: 5e-3,
        delta1: 100.0,
        delta2: 100.5,
        ..Default::default()
    };
    let noise = NoiseModel::UniformMacroscopic { half_width: sigma };
    println!("{:>8} {:>14} {:>14}", "t", "coil", "sensor x");
    for t in [0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0] {
        let coil = classical_coil_signal(t, p.g, p.delta1, p.delta2, sigma);
        let nv = series_average_probability(t, &p, &MicroNoise::default(), &noise)?;
        println!("{t:>8} {coil:>14.5e} {nv:>14.5e}");
    }
    Ok(())
}
