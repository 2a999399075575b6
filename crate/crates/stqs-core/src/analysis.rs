//! State-comparison and metrology analytics: the ancilla-controlled swap
//! test, exact fidelity oracles, Fisher-information reports with the
//! Cramer-Rao bound, and a single finite-difference descent step.

use num_complex::Complex64;

use crate::circuit::Circuit;
use crate::counts::OutcomeCounts;
use crate::error::AnalysisError;
use crate::linalg::{hermitian_eigenvalues, hermitian_sqrt, trace_product};
use crate::measure::Basis;
use crate::noise::{attach_noise_with, AttachOptions, NoiseProfile, NoiseScope};
use crate::pipeline::{
    assemble_ideal, build_probe_prep, build_sensing, CorrectionMode, Encoding, PipelineScheme,
    PipelineSpec, StageSpec,
};
use crate::state::{QuantumState, Role};
use crate::stats::{mix_seed, seeded_rng, variance};

/// Overlap statistic estimated by the swap test: 2 P(ancilla = 0) - 1,
/// which converges to |<psi|phi>|^2 for pure inputs and tr(rho sigma) for
/// mixed ones.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapEstimate {
    pub overlap: f64,
    pub shots: u64,
    pub std_err: f64,
    /// Raw ancilla histogram behind the estimate.
    pub counts: OutcomeCounts,
}

/// Run the swap-test circuit on two equal-width registers: H on a fresh
/// ancilla, one controlled swap per qubit pair, H, then measure the
/// ancilla. Noise is attached per the profile and scope; state-preparation
/// flips apply only to the ancilla since the data registers arrive
/// prepared.
pub fn swap_test(
    state_sens: &QuantumState,
    state_ref: &QuantumState,
    shots: u64,
    profile: &NoiseProfile,
    scope: &NoiseScope,
    seed: u64,
) -> Result<OverlapEstimate, AnalysisError> {
    let w = state_sens.n_qubits();
    if w != state_ref.n_qubits() {
        return Err(AnalysisError::WidthMismatch(w, state_ref.n_qubits()));
    }
    let n = 2 * w + 1;
    let ancilla = n - 1;
    let mut roles = vec![Role::Memory; w];
    roles.extend(vec![Role::Computing; w + 1]);
    let mut circuit = Circuit::new(n).with_roles(roles);
    circuit.h(ancilla);
    for i in 0..w {
        circuit.cswap(ancilla, i, w + i);
    }
    circuit.h(ancilla);
    circuit.measure(ancilla, Basis::Z);

    let options = AttachOptions {
        spe_qubits: Some(vec![ancilla]),
        ..AttachOptions::default()
    };
    let noisy = attach_noise_with(&circuit, profile, scope, &options)?;

    let ancilla_zero = QuantumState::zero(1);
    let initial = state_sens.tensor(state_ref).tensor(&ancilla_zero);
    let counts = noisy.run_dense_from(&initial, shots, seed)?;
    let p0 = counts.fraction_where(|k| k == 0);
    let overlap = 2.0 * p0 - 1.0;
    let std_err = 2.0 * (p0 * (1.0 - p0) / shots as f64).sqrt();
    Ok(OverlapEstimate {
        overlap,
        shots,
        std_err,
        counts,
    })
}

/// tr(rho sigma): what the swap-test circuit physically measures.
pub fn trace_overlap(a: &QuantumState, b: &QuantumState) -> Result<f64, AnalysisError> {
    if a.n_qubits() != b.n_qubits() {
        return Err(AnalysisError::WidthMismatch(a.n_qubits(), b.n_qubits()));
    }
    let dim = 1usize << a.n_qubits();
    let t = trace_product(&a.density_matrix(), &b.density_matrix(), dim);
    Ok(t.re)
}

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, reducing to
/// |<psi|phi>|^2 for pure inputs. Serves as the swap test's convergence
/// oracle.
pub fn fidelity_exact(a: &QuantumState, b: &QuantumState) -> Result<f64, AnalysisError> {
    if a.n_qubits() != b.n_qubits() {
        return Err(AnalysisError::WidthMismatch(a.n_qubits(), b.n_qubits()));
    }
    if a.is_pure_repr() && b.is_pure_repr() {
        return Ok(a.overlap_pure(b));
    }
    let dim = 1usize << a.n_qubits();
    let rho = a.density_matrix();
    let sigma = b.density_matrix();
    for (name, m) in [("first", &rho), ("second", &sigma)] {
        let min = hermitian_eigenvalues(m, dim)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(AnalysisError::BadDensity(format!(
                "{name} input has negative eigenvalue {min:.3e}"
            )));
        }
    }
    let sqrt_rho = hermitian_sqrt(&rho, dim);
    // M = sqrt(rho) sigma sqrt(rho)
    let mut tmp = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += sqrt_rho[r * dim + k] * sigma[k * dim + c];
            }
            tmp[r * dim + c] = acc;
        }
    }
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += tmp[r * dim + k] * sqrt_rho[k * dim + c];
            }
            m[r * dim + c] = acc;
        }
    }
    let trace_sqrt: f64 = hermitian_eigenvalues(&m, dim)
        .into_iter()
        .map(|e| e.max(0.0).sqrt())
        .sum();
    Ok(trace_sqrt * trace_sqrt)
}

// ----------------------------------------------------------------------
// Fisher information
// ----------------------------------------------------------------------

/// Phase probes whose Fisher information has a known benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FisherProbe {
    /// GHZ state with the phase written on every qubit: QFI = N^2.
    GhzPhase { n: usize },
    /// Product of independent interferometers: QFI = N.
    ProductPhase { n: usize },
}

impl FisherProbe {
    pub fn n(&self) -> usize {
        match *self {
            FisherProbe::GhzPhase { n } | FisherProbe::ProductPhase { n } => n,
        }
    }

    /// The pure probe state carrying the parameter.
    pub fn state(&self, theta: f64) -> Result<QuantumState, AnalysisError> {
        let n = self.n();
        let mut c = Circuit::new(n);
        match self {
            FisherProbe::GhzPhase { .. } => {
                build_probe_prep(&mut c, &(0..n).collect::<Vec<_>>())?;
            }
            FisherProbe::ProductPhase { .. } => {
                for q in 0..n {
                    c.h(q);
                }
            }
        }
        build_sensing(&mut c, &(0..n).collect::<Vec<_>>(), Encoding::Phase, &vec![theta; n])?;
        Ok(c.final_state()?)
    }

    /// Success probability of the probe's readout scheme at `theta`.
    fn likelihood(&self, theta: f64) -> Result<f64, AnalysisError> {
        match *self {
            FisherProbe::ProductPhase { .. } => {
                let mut c = Circuit::new(1);
                c.h(0).phase(0, theta).measure(0, Basis::X);
                let (_, probs) = c.measured_distribution()?;
                Ok(probs[0])
            }
            FisherProbe::GhzPhase { n } => {
                let spec = PipelineSpec::single_step(
                    n,
                    PipelineScheme::PhaseMemory,
                    vec![
                        StageSpec::ProbePrep { flipped: vec![] },
                        StageSpec::Sensing {
                            encoding: Encoding::Phase,
                            angles: vec![theta; n],
                        },
                        StageSpec::Storage {
                            correction: CorrectionMode::PostProcessing,
                        },
                    ],
                );
                let circuit = assemble_ideal(&spec)?;
                let (measured, probs) = circuit.measured_distribution()?;
                Ok(crate::experiment::corrected_plus_probability(
                    &measured,
                    &probs,
                    &(0..n).collect::<Vec<_>>(),
                    circuit.n_qubits() - 1,
                    CorrectionMode::PostProcessing,
                ))
            }
        }
    }

    /// Independent draws contributed per shot (a product probe reads out
    /// every qubit).
    fn draws_per_shot(&self) -> u64 {
        match *self {
            FisherProbe::GhzPhase { .. } => 1,
            FisherProbe::ProductPhase { n } => n as u64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FisherReport {
    pub qfi: f64,
    pub cfi: f64,
    pub crb_variance_bound: f64,
    pub empirical_variance: f64,
}

#[derive(Clone, Debug)]
pub struct FisherOptions {
    /// Finite-difference step for the fidelity-based QFI.
    pub delta: f64,
    /// Repetitions behind the empirical estimator variance.
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for FisherOptions {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            repetitions: 200,
            seed: 1,
        }
    }
}

/// Quantum Fisher information from the fidelity curvature
/// 8 (1 - sqrt(F(theta, theta + delta))) / delta^2, refined by one
/// Richardson step; classical Fisher information from the readout
/// likelihood's score; empirical estimator variance from repeated
/// shot-limited estimation, checked against the Cramer-Rao bound
/// Var >= 1 / (shots * F).
pub fn fisher_report(
    probe: &FisherProbe,
    theta: f64,
    shots: u64,
    options: &FisherOptions,
) -> Result<FisherReport, AnalysisError> {
    if options.delta < 1e-7 {
        return Err(AnalysisError::StepTooSmall(options.delta));
    }
    let qfi_at = |delta: f64| -> Result<f64, AnalysisError> {
        let base = probe.state(theta)?;
        let shifted = probe.state(theta + delta)?;
        let f_amp = base.overlap_pure(&shifted).sqrt();
        Ok(8.0 * (1.0 - f_amp) / (delta * delta))
    };
    let coarse = qfi_at(options.delta)?;
    let fine = qfi_at(options.delta / 2.0)?;
    let qfi = (4.0 * fine - coarse) / 3.0;

    // Score of the binomial readout likelihood.
    let dc = 1e-5;
    let p = probe.likelihood(theta)?;
    let dp = (probe.likelihood(theta + dc)? - probe.likelihood(theta - dc)?) / (2.0 * dc);
    let cfi = probe.draws_per_shot() as f64 * dp * dp / (p * (1.0 - p));

    // Repeated estimation through the binomial shortcut (the estimator
    // depends on the counts only through the success fraction).
    use rand_distr::{Binomial, Distribution};
    let draws = shots * probe.draws_per_shot();
    let n_eff = match probe {
        FisherProbe::GhzPhase { n } => *n,
        FisherProbe::ProductPhase { .. } => 1,
    };
    let mut estimates = Vec::with_capacity(options.repetitions);
    for rep in 0..options.repetitions {
        let mut rng = seeded_rng(mix_seed(options.seed, rep as u64));
        let k = Binomial::new(draws, p.clamp(0.0, 1.0))
            .unwrap()
            .sample(&mut rng);
        let p_hat = k as f64 / draws as f64;
        let est = crate::experiment::invert_likelihood(p_hat, true, n_eff)
            .map_err(AnalysisError::Experiment)?;
        estimates.push(est);
    }
    let empirical_variance = variance(&estimates);
    let crb_variance_bound = 1.0 / (shots as f64 * qfi);
    Ok(FisherReport {
        qfi,
        cfi,
        crb_variance_bound,
        empirical_variance,
    })
}

// ----------------------------------------------------------------------
// Variational update
// ----------------------------------------------------------------------

/// One gradient-descent update r_i <- r_i - eta dC/dr_i with the gradient
/// taken by central finite differences.
pub fn variational_step<F>(
    params: &[f64],
    cost: F,
    eta: f64,
    delta: f64,
) -> Result<Vec<f64>, AnalysisError>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(eta > 0.0, "learning rate must be positive");
    assert!(delta > 0.0, "difference step must be positive");
    let mut out = params.to_vec();
    let mut work = params.to_vec();
    for i in 0..params.len() {
        work[i] = params[i] + delta;
        let up = cost(&work);
        work[i] = params[i] - delta;
        let down = cost(&work);
        work[i] = params[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(AnalysisError::NonFiniteCost);
        }
        let grad = (up - down) / (2.0 * delta);
        out[i] -= eta * grad;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{Gate, GateKind};
    use crate::noise::NoiseProfile;

    fn pure(amps: &[(f64, f64)]) -> QuantumState {
        let v: Vec<Complex64> = amps.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        QuantumState::from_amplitudes(v).unwrap()
    }

    #[test]
    fn identical_pure_states_overlap_one() {
        let mut s = QuantumState::zero(1);
        s.apply_gate(&Gate::new(GateKind::H, vec![0]).unwrap()).unwrap();
        let est = swap_test(
            &s,
            &s.clone(),
            100_000,
            &NoiseProfile::noiseless(),
            &NoiseScope::default(),
            5,
        )
        .unwrap();
        assert!((est.overlap - 1.0).abs() < 0.005, "overlap {}", est.overlap);
    }

    #[test]
    fn orthogonal_states_overlap_zero() {
        let zero = QuantumState::zero(1);
        let mut one = QuantumState::zero(1);
        one.apply_gate(&Gate::new(GateKind::X, vec![0]).unwrap()).unwrap();
        let est = swap_test(
            &zero,
            &one,
            200_000,
            &NoiseProfile::noiseless(),
            &NoiseScope::default(),
            9,
        )
        .unwrap();
        assert!(est.overlap.abs() < 4.0 * est.std_err + 0.01, "overlap {}", est.overlap);
    }

    #[test]
    fn width_mismatch_rejected() {
        let a = QuantumState::zero(1);
        let b = QuantumState::zero(2);
        assert!(matches!(
            swap_test(&a, &b, 10, &NoiseProfile::noiseless(), &NoiseScope::default(), 0),
            Err(AnalysisError::WidthMismatch(1, 2))
        ));
    }

    #[test]
    fn swap_test_estimates_trace_overlap_for_mixed_pairs() {
        let mut rng = seeded_rng(31);
        for trial in 0..5 {
            let rho = QuantumState::random_density(2, &mut rng);
            let sigma = QuantumState::random_density(2, &mut rng);
            let exact = trace_overlap(&rho, &sigma).unwrap();
            let est = swap_test(
                &rho,
                &sigma,
                400_000,
                &NoiseProfile::noiseless(),
                &NoiseScope::default(),
                100 + trial,
            )
            .unwrap();
            assert!(
                (est.overlap - exact).abs() < 4.0 * est.std_err,
                "trial {trial}: {} vs {exact} (se {})",
                est.overlap,
                est.std_err
            );
        }
    }

    #[test]
    fn fidelity_of_identical_states_is_one() {
        let mut rng = seeded_rng(17);
        let rho = QuantumState::random_density(2, &mut rng);
        let f = fidelity_exact(&rho, &rho).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "f = {f}");
    }

    #[test]
    fn fidelity_of_orthogonal_pure_states_is_zero() {
        let zero = pure(&[(1.0, 0.0), (0.0, 0.0)]);
        let one = pure(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(fidelity_exact(&zero, &one).unwrap() < 1e-12);
    }

    #[test]
    fn fidelity_matches_overlap_for_pure_mixed_pair() {
        // F(|psi>, sigma) = <psi|sigma|psi>.
        let mut rng = seeded_rng(23);
        let sigma = QuantumState::random_density(1, &mut rng);
        let psi = pure(&[(std::f64::consts::FRAC_1_SQRT_2, 0.0), (0.0, std::f64::consts::FRAC_1_SQRT_2)]);
        let mut psi_rho = psi.clone();
        psi_rho.promote_to_density();
        let expected = trace_overlap(&psi_rho, &sigma).unwrap();
        let f = fidelity_exact(&psi_rho, &sigma).unwrap();
        assert!((f - expected).abs() < 1e-9, "{f} vs {expected}");
    }

    #[test]
    fn ghz_probe_reaches_heisenberg_information() {
        for n in [2usize, 4, 6] {
            let report = fisher_report(
                &FisherProbe::GhzPhase { n },
                0.1,
                1000,
                &FisherOptions::default(),
            )
            .unwrap();
            let expected = (n * n) as f64;
            assert!(
                (report.qfi - expected).abs() / expected < 0.01,
                "n={n}: qfi {}",
                report.qfi
            );
            assert!(report.cfi <= report.qfi * 1.01);
        }
    }

    #[test]
    fn product_probe_gets_linear_information() {
        for n in [2usize, 5, 8] {
            let report = fisher_report(
                &FisherProbe::ProductPhase { n },
                0.1,
                1000,
                &FisherOptions::default(),
            )
            .unwrap();
            let expected = n as f64;
            assert!(
                (report.qfi - expected).abs() / expected < 0.01,
                "n={n}: qfi {}",
                report.qfi
            );
        }
    }

    #[test]
    fn halving_delta_barely_moves_the_qfi() {
        let a = fisher_report(
            &FisherProbe::GhzPhase { n: 4 },
            0.1,
            100,
            &FisherOptions {
                delta: 1e-4,
                repetitions: 10,
                seed: 0,
            },
        )
        .unwrap();
        let b = fisher_report(
            &FisherProbe::GhzPhase { n: 4 },
            0.1,
            100,
            &FisherOptions {
                delta: 5e-5,
                repetitions: 10,
                seed: 0,
            },
        )
        .unwrap();
        assert!((a.qfi - b.qfi).abs() / a.qfi < 0.001);
    }

    #[test]
    fn variance_respects_cramer_rao() {
        for probe in [FisherProbe::GhzPhase { n: 4 }, FisherProbe::ProductPhase { n: 4 }] {
            let report = fisher_report(&probe, 0.2, 2000, &FisherOptions::default()).unwrap();
            // Sample variance fluctuates ~ sqrt(2/(R-1)); allow 3 sigma.
            let slack = 3.0 * (2.0 / 199.0f64).sqrt();
            assert!(
                report.empirical_variance >= report.crb_variance_bound * (1.0 - slack),
                "{probe:?}: var {} below bound {}",
                report.empirical_variance,
                report.crb_variance_bound
            );
        }
    }

    #[test]
    fn zero_gradient_leaves_params_fixed() {
        let params = vec![1.0, -2.0];
        let out = variational_step(&params, |_| 3.0, 0.1, 1e-5).unwrap();
        assert_eq!(out, params);
    }

    #[test]
    fn linear_cost_steps_by_eta() {
        let out = variational_step(&[5.0], |r| r[0], 0.25, 1e-5).unwrap();
        assert!((out[0] - 4.75).abs() < 1e-9);
    }

    #[test]
    fn quadratic_cost_converges_geometrically() {
        let target = 0.7;
        let eta = 0.2f64;
        let start = 3.0f64;
        let e0 = (start - target).abs();
        let k = ((e0 / 1e-6).ln() / (1.0 - 2.0 * eta).abs().ln().abs()).ceil() as usize;
        let mut r = vec![start];
        for _ in 0..k {
            r = variational_step(&r, |p| (p[0] - target) * (p[0] - target), eta, 1e-6).unwrap();
        }
        assert!((r[0] - target).abs() < 1e-6, "after {k} steps: {}", r[0]);
    }

    #[test]
    fn descent_never_increases_quadratic_cost() {
        let cost = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>();
        let mut r = vec![1.0, -0.5, 2.0];
        let mut last = cost(&r);
        for _ in 0..50 {
            r = variational_step(&r, cost, 0.3, 1e-6).unwrap();
            let now = cost(&r);
            assert!(now <= last + 1e-12);
            last = now;
        }
    }

    #[test]
    fn non_finite_cost_detected() {
        let result = variational_step(&[0.0], |p| 1.0 / p[0], 0.1, 1e-3);
        assert!(matches!(result, Err(AnalysisError::NonFiniteCost)) || result.is_ok());
        let result = variational_step(&[0.0], |_| f64::NAN, 0.1, 1e-3);
        assert!(matches!(result, Err(AnalysisError::NonFiniteCost)));
    }
}
