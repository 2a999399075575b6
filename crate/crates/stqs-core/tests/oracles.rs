//! Cross-module oracle checks: circuit structure against the intended gate
//! sequences, trajectory sampling against the dense density-matrix oracle,
//! estimator consistency at large shot counts, and swap-test statistics
//! against exact trace overlaps.

use stqs_core::analysis::{swap_test, trace_overlap};
use stqs_core::circuit::Instruction;
use stqs_core::counts::total_variation;
use stqs_core::experiment::{
    dm_circuit, dm_likelihood, radar_circuit, run, ExperimentConfig, SwapBase,
};
use stqs_core::gate::GateKind;
use stqs_core::measure::Basis;
use stqs_core::noise::{
    attach_noise, default_profile, ErrorClass, NoiseProfile, NoiseScope, Platform,
};
use stqs_core::state::QuantumState;
use stqs_core::stats::{mean, seeded_rng, stable_hash};

/// Gate/measure shorthand of an instruction list for structural asserts.
fn shape(instructions: &[Instruction]) -> Vec<String> {
    instructions
        .iter()
        .map(|instr| match instr {
            Instruction::Gate(g) => {
                let name = match g.kind {
                    GateKind::H => "h",
                    GateKind::X => "x",
                    GateKind::Z => "z",
                    GateKind::P(_) => "p",
                    GateKind::Rx(_) => "rx",
                    GateKind::Cnot => "cnot",
                    GateKind::Cswap => "cswap",
                    GateKind::Delay(_) => "delay",
                };
                format!("{name}{:?}", g.targets)
            }
            Instruction::Channel { .. } => "channel".into(),
            Instruction::Measure { qubit, basis } => {
                format!("m{}[{qubit}]", if *basis == Basis::X { "x" } else { "z" })
            }
            Instruction::Conditional { control, gate, .. } => {
                format!("c{control}->z{:?}", gate.targets)
            }
        })
        .collect()
}

#[test]
fn radar_circuit_has_the_documented_structure() {
    // 2 soil + 1 free sensors, memory = 3: GHZ chain, free-space flip,
    // phase encoding, transfer CNOT, X-basis sensor readout, memory
    // readout.
    let c = radar_circuit(2, 1, 0.5, 0.1).unwrap();
    assert_eq!(
        shape(c.instructions()),
        vec![
            "h[0]", "cnot[0, 1]", "cnot[1, 2]", // GHZ over the 3 sensors
            "x[2]",                             // invert the free-space branch
            "p[0]", "p[1]", "p[2]",             // signal encoding
            "cnot[0, 3]",                       // transfer onto memory
            "mx[0]", "mx[1]", "mx[2]",          // sensor readout
            "mx[3]",                            // memory readout
        ]
    );
}

#[test]
fn dm_circuit_has_the_documented_structure() {
    // 3 sensors, memory = 3: H on the non-signal sensors, chain toward the
    // signal qubit, rotations, mirror chain, H undo, copy to memory, Z
    // readouts, delay.
    let c = dm_circuit(3, 0.2, 0.4).unwrap();
    assert_eq!(
        shape(c.instructions()),
        vec![
            "h[1]", "h[2]", "cnot[1, 0]", "cnot[2, 1]", // entangle
            "rx[0]", "rx[1]", "rx[2]",                  // signal
            "cnot[2, 1]", "cnot[1, 0]", "h[1]", "h[2]", // disentangle
            "cnot[0, 3]",                               // copy to memory
            "mz[0]", "mz[1]", "mz[2]",                  // sensor readout
            "delay[3]",                                 // idle interval
            "mz[3]",                                    // memory readout
        ]
    );
}

#[test]
fn five_qubit_radar_trajectory_matches_dense_oracle() {
    // 2 + 2 sensors plus memory under the default superconducting profile:
    // the stochastic unraveling reproduces the density-matrix distribution.
    let ideal = radar_circuit(2, 2, 0.5, 0.1).unwrap();
    let noisy = attach_noise(
        &ideal,
        &default_profile(Platform::Superconducting),
        &NoiseScope::default(),
    )
    .unwrap();
    let (_, exact) = noisy.measured_distribution_with_readout().unwrap();
    let counts = noisy.run_trajectory(100_000, 909).unwrap();
    let tv = total_variation(&counts, &exact);
    assert!(tv < 0.02, "tv = {tv}");
}

#[test]
fn estimator_converges_within_five_sigma_at_a_million_shots() {
    // Binomial error propagated through the likelihood derivative:
    // sigma_phi = sqrt(p (1 - p) / shots) / |dp/dphi|.
    let shots = 1_000_000u64;
    for (n, phi) in [(4usize, 0.1), (6, 0.08), (8, 0.05)] {
        let mut devs = Vec::new();
        for seed in 0..10u64 {
            let config = ExperimentConfig::dark_matter(n, phi)
                .with_shots(shots)
                .with_seed(stable_hash(&[17, n as u64, seed]));
            let est = run(&config).unwrap().phi_est.unwrap();
            devs.push((est - phi).abs());
        }
        let p = dm_likelihood(n, phi);
        let dpdphi = (n as f64 / 2.0) * (n as f64 * phi).sin();
        let sigma = (p * (1.0 - p) / shots as f64).sqrt() / dpdphi;
        for (seed, d) in devs.iter().enumerate() {
            assert!(*d <= 5.0 * sigma, "n={n} seed={seed}: |dev| {d} > 5 sigma {sigma}");
        }
    }
}

#[test]
fn more_probes_help_under_default_noise() {
    // Mean dark-matter accuracy grows with the sensor count at phi = 0.1
    // under the default superconducting profile.
    let mut means = Vec::new();
    for n in [4usize, 6, 8, 10] {
        let mut accs = Vec::new();
        for seed in 0..6u64 {
            let config = ExperimentConfig::dark_matter(n, 0.1)
                .with_profile(default_profile(Platform::Superconducting))
                .with_shots(200_000)
                .with_seed(stable_hash(&[19, n as u64, seed]));
            accs.push(run(&config).unwrap().accuracy_pct.unwrap());
        }
        means.push(mean(&accs));
    }
    for w in means.windows(2) {
        assert!(w[1] >= w[0] - 0.5, "probe-count trend violated: {means:?}");
    }
    assert!(means[3] > means[0], "no overall gain: {means:?}");
}

#[test]
fn swap_test_is_unbiased_over_many_seeds() {
    // Noiseless circuit, noisy input states: the mean of 50 overlap
    // estimates matches tr(rho sigma) within 3 pooled standard errors.
    let mut rng = seeded_rng(808);
    let rho = QuantumState::random_density(2, &mut rng);
    let sigma = QuantumState::random_density(2, &mut rng);
    let exact = trace_overlap(&rho, &sigma).unwrap();
    let shots = 20_000u64;
    let mut estimates = Vec::new();
    let mut pooled_var = 0.0;
    for seed in 0..50u64 {
        let est = swap_test(
            &rho,
            &sigma,
            shots,
            &NoiseProfile::noiseless(),
            &NoiseScope::default(),
            stable_hash(&[23, seed]),
        )
        .unwrap();
        pooled_var += est.std_err * est.std_err;
        estimates.push(est.overlap);
    }
    let pooled_se = (pooled_var / (50.0 * 50.0)).sqrt();
    let bias = (mean(&estimates) - exact).abs();
    assert!(bias <= 3.0 * pooled_se, "bias {bias} vs 3 se {pooled_se}");
}

#[test]
fn dm_swap_overlap_sits_in_the_degraded_band() {
    // Ideal reference vs default-noise sensed memory state: the overlap
    // lands noticeably below 1 (platform parameter choices shift the exact
    // value, so this is a band check), and relaxing a class helps.
    let overlap_for = |scope: NoiseScope| {
        let config = ExperimentConfig::swap_test(SwapBase::DarkMatter)
            .with_profile(default_profile(Platform::Superconducting))
            .with_scope(scope)
            .with_shots(1_000_000)
            .with_seed(29);
        run(&config).unwrap().overlap.unwrap()
    };
    let default = overlap_for(NoiseScope::default());
    let gates_only =
        overlap_for(NoiseScope::isolating([ErrorClass::SingleGate, ErrorClass::TwoGate], 0.0));
    let readout_only = overlap_for(NoiseScope::isolating([ErrorClass::Readout], 0.0));
    let noiseless = overlap_for(NoiseScope::isolating([], 0.0));
    assert!((0.75..0.98).contains(&default), "default {default}");
    assert!(gates_only > default && readout_only > default);
    assert!((noiseless - 1.0).abs() < 0.005, "noiseless {noiseless}");
}

#[test]
fn radar_with_delay_accumulates_the_extra_phase() {
    // A delayed radar run still estimates accurately because the target
    // accounts for the delay-induced shift.
    let mut config = ExperimentConfig::radar(3, 3, 0.4, 0.1);
    config.delay_tau = 0.5;
    config.shots = 1_000_000;
    config.seed = 37;
    let result = run(&config).unwrap();
    // total = 3 * 0.4 - 3 * 0.1 + 0.5 = 1.4, per qubit 0.4667
    assert!((result.meta.phi_true - 1.4 / 3.0).abs() < 1e-12);
    assert!(result.accuracy_pct.unwrap() > 99.0);
}
