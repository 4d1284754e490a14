//! Fisher-information scaling and few-spin quantum models.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nvnmr::fisher::{
    f_c_integral, fisher_information_sum, fisher_matrix_two_params, fit_scaling, phase_averaged_information,
    FisherScenario, Readout,
};
use nvnmr::quantum::{
    coherence_closed_form, evolve_exact, multinucleus_readout, semiclassical_coherence, twospin_probabilities,
    Basis, ExactProtocol, NucleusSpec, ResetMode, SpinEnsembleState, TwoSpinHamiltonian,
};
use nvnmr::spectral::{compute_spectrum, find_peaks, Window};
use nvnmr::trace::{ProbabilityTrace, TimeGrid};

fn scenario(readout: Readout, g: f64, tau: f64, noisy: bool) -> FisherScenario {
    FisherScenario {
        readout,
        g1: g,
        g2: g,
        tau,
        omega_s: 100.0,
        omega_r: 0.4 / tau,
        noisy_omega_s: noisy,
        delta_width: 0.0,
    }
}

#[test]
fn flip_flop_scaling_holds_at_any_coupling() {
    let ns = [1000, 2000, 5000, 10_000];
    for gt in [1e-3, 1.0, 10.0] {
        let tau = 1e-2;
        let s = scenario(Readout::HartmannHahnZ, gt / tau, tau, false);
        let taus: Vec<f64> = (0..5).map(|k| tau * 10f64.powf(k as f64 / 4.0 - 1.0)).collect();
        let fit = fit_scaling(&s, &ns, &taus).unwrap();
        assert!((fit.n_exponent - 3.0).abs() < 0.1, "g tau {gt}: {fit:?}");
        assert!((fit.tau_exponent - 4.0).abs() < 0.15, "g tau {gt}: {fit:?}");
    }
}

#[test]
fn flip_flop_matches_sensing_at_small_phase() {
    for noisy in [false, true] {
        let s = scenario(Readout::SensingX, 1.0, 1e-3, noisy);
        let h = FisherScenario {
            readout: Readout::HartmannHahnZ,
            ..s
        };
        let a = phase_averaged_information(&s, 5000, 16).unwrap();
        let b = phase_averaged_information(&h, 5000, 16).unwrap();
        assert!((a / b - 1.0).abs() < 0.01, "noisy {noisy}: {a} vs {b}");
    }
}

#[test]
fn noisy_penalty_grows_with_coupling() {
    let tau = 1.0;
    let mut last = 0.0;
    for gt in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let quiet = scenario(Readout::SensingX, gt / tau, tau, false);
        let noisy = FisherScenario {
            noisy_omega_s: true,
            ..quiet
        };
        let penalty = phase_averaged_information(&quiet, 4000, 16).unwrap()
            / phase_averaged_information(&noisy, 4000, 16).unwrap();
        assert!(penalty > last, "g tau {gt}: penalty {penalty} after {last}");
        last = penalty;
    }
    assert!(last > 5.0);
}

#[test]
fn trivial_fisher_cases() {
    for readout in [Readout::SensingX, Readout::HartmannHahnZ] {
        let s = FisherScenario {
            omega_r: 0.0,
            ..scenario(readout, 1.0, 0.1, false)
        };
        assert_eq!(fisher_information_sum(&s, 100).unwrap().total, 0.0);
        let r = fisher_information_sum(&scenario(readout, 1.0, 0.1, false), 0).unwrap();
        assert_eq!(r.total, 0.0);
    }
    let r = fisher_information_sum(&scenario(Readout::SensingY, 0.7, 0.05, true), 300).unwrap();
    assert!(r.per_shot.iter().all(|v| *v >= 0.0));
    let direct: f64 = r.per_shot.iter().sum();
    assert!((r.total - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
}

#[test]
fn two_parameter_information_limits() {
    let (tau, n): (f64, usize) = (0.01, 1000);
    let k = tau.powi(4) * (n as f64).powi(3);
    let g = 0.8;
    let eq = fisher_matrix_two_params(g, g, tau, n).unwrap().i_r;
    assert!((eq / (g * g * k / 3.0) - 1.0).abs() < 1e-12);
    let small = fisher_matrix_two_params(1e-3, 1.0, tau, n).unwrap().i_r;
    assert!((small / (2.0 / 3.0 * 1e-6 * k) - 1.0).abs() < 1e-5);
    assert!(fisher_matrix_two_params(0.0, 1.0, tau, n).is_err());
}

#[test]
fn f_c_limits() {
    assert!((f_c_integral(1e-6).unwrap() - 0.5).abs() < 1e-9);
    // Fixed-grid Simpson on the half period as a second scheme.
    let c = 0.5;
    let n = 20_000;
    let h = PI / n as f64;
    let f = |x: f64| x.sin().powi(2) / (1.0 + c * c + 2.0 * c * x.cos()).powf(1.5);
    let mut s = f(0.0) + f(PI);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let simpson = s * h / 3.0 / PI;
    assert!((f_c_integral(c).unwrap() - simpson).abs() < 1e-7);
}

#[test]
fn quantum_trivial_limits() {
    for n in 1..6 {
        assert_eq!(coherence_closed_form(n, 0.0, 0.3, 2.0, 1.0).re, 0.5);
    }
    let ff = twospin_probabilities(0.0, 1.0, 3.0, 4.0, 0.5, TwoSpinHamiltonian::FlipFlop, Basis::Z).unwrap();
    let sx = twospin_probabilities(0.0, 1.0, 3.0, 4.0, 0.5, TwoSpinHamiltonian::Sensing, Basis::X).unwrap();
    assert_eq!((ff, sx), (1.0, 0.5));
    let spec = NucleusSpec::new(vec![0.0; 3], vec![1.0, 2.0, 3.0]).unwrap();
    assert_eq!(multinucleus_readout(&spec, 1.0, 0.4, Basis::Y).unwrap().value, 0.5);
    assert_eq!(multinucleus_readout(&spec, 1.0, 0.4, Basis::X).unwrap().value, 1.0);
}

#[test]
fn semiclassical_limit_at_small_collective_phase() {
    let (n, ngt, delta) = (1000u32, 1e-2, 3.0);
    let g = ngt / n as f64;
    for t in [0.0, 0.3, 1.7, 4.2] {
        let d = coherence_closed_form(n, g, 1.0, delta, t) - semiclassical_coherence(n, g, 1.0, delta, t);
        assert!(d.norm() < 1e-3);
    }
}

#[test]
fn two_equal_nuclei_y_readout_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let g = rng.random_range(-2.0..2.0);
        let (d1, d2) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let t = rng.random_range(0.0..20.0);
        let spec = NucleusSpec::new(vec![g, g], vec![d1, d2]).unwrap();
        let got = multinucleus_readout(&spec, 1.0, t, Basis::Y).unwrap().value;
        let arg = 2.0 * g * (0.5 * (d1 - d2) * t).cos() * (0.5 * (d1 + d2) * t).cos();
        let want = (arg - PI / 4.0).cos().powi(2);
        assert!((got - want).abs() < 1e-12);
    }
}

fn xy_trace(spec: &NucleusSpec, tau: f64, grid: &TimeGrid, basis: Basis) -> ProbabilityTrace {
    let v = grid
        .times()
        .iter()
        .map(|&t| multinucleus_readout(spec, tau, t, basis).unwrap().value)
        .collect();
    ProbabilityTrace::new(grid, v, Default::default()).unwrap()
}

#[test]
fn x_readout_shows_difference_line_and_y_shows_larmor_lines() {
    let (w1, w2) = (2.0 * PI * 0.71, 2.0 * PI * 0.71126);
    let g = 2.0 * PI * 1e-3;
    let tau = 8.0 * PI / w1;
    let spec = NucleusSpec::new(vec![g, g], vec![w1, w2]).unwrap();
    let grid = TimeGrid::uniform(0.25, 0.25, 32_000).unwrap();
    let sx = compute_spectrum(&xy_trace(&spec, tau, &grid, Basis::X), Window::Hann, true).unwrap();
    let sy = compute_spectrum(&xy_trace(&spec, tau, &grid, Basis::Y), Window::Hann, true).unwrap();
    let diff = w2 - w1;
    let kd = sx.nearest_bin(diff);
    assert!(sx.is_local_max(kd) && sx.quality(kd) > 5.0);
    let kd_y = sy.nearest_bin(diff);
    assert!(sy.quality(kd_y) < 5.0, "y carries the difference line: {}", sy.quality(kd_y));
    let peaks = find_peaks(&sy, diff, 4);
    for w in [w1, w2] {
        assert!(peaks.peaks[..2].iter().any(|p| (p.frequency - w).abs() <= sy.bin_width()), "{peaks:?}");
    }
}

fn protocol(h: TwoSpinHamiltonian, readout: Basis, g: f64, shots: usize) -> ExactProtocol {
    ExactProtocol {
        hamiltonian: h,
        g_global: g,
        tau: 1.0,
        sample_interval: 1.3,
        shots,
        readout,
        reset: ResetMode::Deterministic,
        frequency_shifts: None,
        coevolve: false,
    }
}

#[test]
fn zero_coupling_leaves_sensor_untouched() {
    let spec = NucleusSpec::new(vec![1.0, 0.5], vec![2.0, 3.0]).unwrap();
    let tr = evolve_exact(
        &SpinEnsembleState::polarized(2).unwrap(),
        &spec,
        &protocol(TwoSpinHamiltonian::Sensing, Basis::X, 0.0, 20),
    )
    .unwrap();
    assert!(tr.probabilities.iter().all(|p| (p - 0.5).abs() < 1e-14));
    assert!(tr.sensor_purity.iter().all(|p| (p - 1.0).abs() < 1e-14));
}

/// Directional only. A single shot costs either coupling an `O((g tau)^2)` purity deficit; the
/// flip-flop deficit then shrinks as the nuclei polarize, the sensing one does not.
#[test]
fn back_action_polarizes_under_flip_flop_and_mixes_under_sensing() {
    let spec = NucleusSpec::new(vec![1.0, 1.0], vec![4.46, 4.47]).unwrap();
    let start = SpinEnsembleState::polarized(2).unwrap();
    let shots = 4000;
    let run = |h, readout| {
        let p = ExactProtocol {
            tau: 5.6,
            sample_interval: 0.25,
            ..protocol(h, readout, 6.3e-3, shots)
        };
        evolve_exact(&start, &spec, &p).unwrap()
    };
    let ff = run(TwoSpinHamiltonian::FlipFlop, Basis::Z);
    let se = run(TwoSpinHamiltonian::Sensing, Basis::X);
    let last = shots - 1;
    assert!(ff.polarization.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(ff.polarization[last] > 1.5);
    assert!(1.0 - ff.sensor_purity[last] < 1e-5);
    assert!((1.0 - ff.sensor_purity[last]) * 100.0 < 1.0 - ff.sensor_purity[0]);
    assert!(1.0 - se.sensor_purity[last] > 1e-3);
    assert!(se.nuclear_purity[last] < se.nuclear_purity[0] - 0.1);
    assert!(se.polarization[last].abs() < 1e-6);
}

#[test]
fn evolution_preserves_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=4 {
        let couplings: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.5)).collect();
        let larmor: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
        let spec = NucleusSpec::new(couplings, larmor).unwrap();
        for reset in [ResetMode::None, ResetMode::Stochastic { seed: 9 }] {
            for h in [TwoSpinHamiltonian::Sensing, TwoSpinHamiltonian::FlipFlop] {
                let p = ExactProtocol {
                    reset,
                    ..protocol(h, Basis::X, 0.3, 200)
                };
                let tr = evolve_exact(&SpinEnsembleState::polarized(n).unwrap(), &spec, &p).unwrap();
                let norm = tr.final_state.unwrap().norm();
                assert!((norm - 1.0).abs() < 1e-10, "{norm}");
            }
        }
    }
}

#[test]
fn sensing_readout_follows_collective_phase_at_weak_coupling() {
    let spec = NucleusSpec::new(vec![1.0, 0.7, 1.3], vec![2.0, 2.9, 3.7]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for gt in [1e-3, 1e-2] {
        let p = ExactProtocol {
            tau: 1.0,
            sample_interval: 1.0,
            reset: ResetMode::Deterministic,
            ..protocol(TwoSpinHamiltonian::Sensing, Basis::X, gt, 1)
        };
        for _ in 0..20 {
            let t = rng.random_range(0.5..30.0);
            let shifted = ExactProtocol { sample_interval: t, ..p.clone() };
            let exact = evolve_exact(&SpinEnsembleState::polarized(3).unwrap(), &spec, &shifted).unwrap().probabilities[0];
            let scaled = NucleusSpec::new(spec.couplings.iter().map(|c| c * gt).collect(), spec.larmor.clone()).unwrap();
            let semi = multinucleus_readout(&scaled, 1.0, t, Basis::Y).unwrap().value;
            assert!((exact - semi).abs() < 10.0 * gt * gt, "g tau {gt}: {exact} vs {semi}");
        }
    }
}
