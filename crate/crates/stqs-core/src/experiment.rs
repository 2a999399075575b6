//! End-to-end experiment definitions: the quantum-radar and dark-matter
//! sensing circuits, arc-function phase estimators, the signed accuracy
//! metric, precision-scaling runs, and soil-moisture conversion.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::counts::OutcomeCounts;
use crate::error::ExperimentError;
use crate::noise::{attach_noise, NoiseProfile, NoiseScope};
use crate::pipeline::{
    assemble_ideal, CorrectionMode, Encoding, PipelineScheme, PipelineSpec, StageSpec,
};
use crate::state::QuantumState;
use crate::stats::{mix_seed, seeded_rng};

/// Dense density-matrix simulation is memory-hostile past this size; wider
/// circuits default to trajectory sampling.
pub const DENSE_QUBIT_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Radar,
    DarkMatter,
    Scaling,
    SwapTest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Dense,
    Trajectory,
    /// Dense up to `DENSE_QUBIT_LIMIT` qubits, trajectory beyond.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// Independent single-qubit interferometers, shots pooled.
    Unentangled,
    /// One entangled probe spanning all sensors.
    Ghz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapBase {
    Radar,
    DarkMatter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Radar: soil-facing and free-space sensor counts.
    pub n_s: usize,
    pub n_f: usize,
    /// Dark matter: sensor count.
    pub n_dm: usize,
    /// Scaling: probe count and mode.
    pub n_probes: usize,
    pub scaling_mode: ScalingMode,
    /// Swap test: which application supplies the sensed state.
    pub swap_base: SwapBase,
    pub phi_soil: f64,
    pub phi_free: f64,
    /// Signal angle for dark-matter, scaling, and swap-test runs.
    pub phi: f64,
    pub shots: u64,
    pub profile: NoiseProfile,
    pub scope: NoiseScope,
    pub backend: BackendChoice,
    pub post_select: bool,
    pub delay_tau: f64,
    pub correction: CorrectionMode,
    pub seed: u64,
}

pub const DEFAULT_SHOTS: u64 = 1_000_000;

impl ExperimentConfig {
    fn base(kind: ExperimentKind) -> Self {
        Self {
            kind,
            n_s: 3,
            n_f: 3,
            n_dm: 4,
            n_probes: 2,
            scaling_mode: ScalingMode::Ghz,
            swap_base: SwapBase::DarkMatter,
            phi_soil: 0.9,
            phi_free: 0.1,
            phi: 0.1,
            shots: DEFAULT_SHOTS,
            profile: NoiseProfile::noiseless(),
            scope: NoiseScope::default(),
            backend: BackendChoice::Auto,
            post_select: false,
            delay_tau: 0.0,
            correction: CorrectionMode::PostProcessing,
            seed: 0,
        }
    }

    pub fn radar(n_s: usize, n_f: usize, phi_soil: f64, phi_free: f64) -> Self {
        Self {
            n_s,
            n_f,
            phi_soil,
            phi_free,
            ..Self::base(ExperimentKind::Radar)
        }
    }

    pub fn dark_matter(n_dm: usize, phi: f64) -> Self {
        Self {
            n_dm,
            phi,
            ..Self::base(ExperimentKind::DarkMatter)
        }
    }

    pub fn scaling(n_probes: usize, mode: ScalingMode, phi: f64) -> Self {
        Self {
            n_probes,
            scaling_mode: mode,
            phi,
            ..Self::base(ExperimentKind::Scaling)
        }
    }

    pub fn swap_test(base: SwapBase) -> Self {
        Self {
            swap_base: base,
            ..Self::base(ExperimentKind::SwapTest)
        }
    }

    pub fn with_profile(mut self, profile: NoiseProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_scope(mut self, scope: NoiseScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_post_select(mut self, on: bool) -> Self {
        self.post_select = on;
        self
    }

    /// Total sensing qubits of the underlying circuit.
    pub fn n_sensors(&self) -> usize {
        match self.kind {
            ExperimentKind::Radar => self.n_s + self.n_f,
            ExperimentKind::DarkMatter => self.n_dm,
            ExperimentKind::Scaling => self.n_probes,
            ExperimentKind::SwapTest => match self.swap_base {
                SwapBase::Radar => self.n_s + self.n_f,
                SwapBase::DarkMatter => self.n_dm,
            },
        }
    }

    /// The target the estimator is judged against: the per-qubit signal for
    /// radar, the rotation angle for dark matter and scaling.
    pub fn phi_true(&self) -> f64 {
        match self.kind {
            ExperimentKind::Radar => {
                let total = self.radar_total_phase();
                total.abs() / self.n_s as f64
            }
            _ => self.phi,
        }
    }

    /// Memory branch phase of the radar circuit: the soil ensemble accrues
    /// against the bit-flipped free-space ensemble, plus any delay.
    pub fn radar_total_phase(&self) -> f64 {
        self.n_s as f64 * self.phi_soil - self.n_f as f64 * self.phi_free + self.delay_tau
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.profile.validate()?;
        self.scope.validate()?;
        if self.shots == 0 {
            return Err(ExperimentError::InvalidConfig("shots must be >= 1".into()));
        }
        match self.kind {
            ExperimentKind::Radar => {
                if self.n_s == 0 || self.n_f == 0 {
                    return Err(ExperimentError::InvalidConfig(
                        "radar needs at least one soil and one free-space sensor".into(),
                    ));
                }
                let total = self.radar_total_phase().abs();
                if total <= 0.0 || total >= std::f64::consts::PI {
                    return Err(ExperimentError::InversionDomain(total));
                }
            }
            ExperimentKind::DarkMatter => {
                if self.n_dm < 2 {
                    return Err(ExperimentError::InvalidConfig(
                        "dark matter needs at least two sensors".into(),
                    ));
                }
                let total = self.n_dm as f64 * self.phi;
                if total <= 0.0 || total >= std::f64::consts::PI {
                    return Err(ExperimentError::InversionDomain(total));
                }
            }
            ExperimentKind::Scaling => {
                if self.n_probes == 0 {
                    return Err(ExperimentError::InvalidConfig(
                        "scaling needs at least one probe".into(),
                    ));
                }
                let total = match self.scaling_mode {
                    ScalingMode::Ghz => self.n_probes as f64 * self.phi,
                    ScalingMode::Unentangled => self.phi,
                };
                if total <= 0.0 || total >= std::f64::consts::PI {
                    return Err(ExperimentError::InversionDomain(total));
                }
            }
            ExperimentKind::SwapTest => {
                let total = match self.swap_base {
                    SwapBase::Radar => self.radar_total_phase().abs(),
                    SwapBase::DarkMatter => self.n_dm as f64 * self.phi,
                };
                if total <= 0.0 || total >= std::f64::consts::PI {
                    return Err(ExperimentError::InversionDomain(total));
                }
            }
        }
        Ok(())
    }

    fn resolve_backend(&self, n_qubits: usize) -> BackendChoice {
        match self.backend {
            BackendChoice::Auto => {
                if n_qubits <= DENSE_QUBIT_LIMIT {
                    BackendChoice::Dense
                } else {
                    BackendChoice::Trajectory
                }
            }
            other => other,
        }
    }
}

// ----------------------------------------------------------------------
// Circuits
// ----------------------------------------------------------------------

/// The radar pipeline spec: a GHZ probe over soil and free-space ensembles
/// with the free-space qubits bit-flipped so the two signals interfere as a
/// difference, phase encoding, storage onto the memory, and an optional
/// delay. The memory reads out in the X basis.
fn radar_pipeline(
    n_s: usize,
    n_f: usize,
    phi_soil: f64,
    phi_free: f64,
    delay_tau: f64,
    correction: CorrectionMode,
    final_readout: bool,
) -> PipelineSpec {
    let mut angles = vec![phi_soil; n_s];
    angles.extend(std::iter::repeat_n(phi_free, n_f));
    let mut steps = vec![
        StageSpec::ProbePrep {
            flipped: (n_s..n_s + n_f).collect(),
        },
        StageSpec::Sensing {
            encoding: Encoding::Phase,
            angles,
        },
        StageSpec::Storage { correction },
    ];
    if delay_tau != 0.0 {
        steps.push(StageSpec::Delay { tau: delay_tau });
    }
    PipelineSpec {
        n_sensing: n_s + n_f,
        memory_enabled: true,
        scheme: PipelineScheme::PhaseMemory,
        steps,
        final_readout,
    }
}

/// Ideal quantum-radar circuit (memory is the highest qubit index).
pub fn radar_circuit(
    n_s: usize,
    n_f: usize,
    phi_soil: f64,
    phi_free: f64,
) -> Result<Circuit, ExperimentError> {
    Ok(assemble_ideal(&radar_pipeline(
        n_s,
        n_f,
        phi_soil,
        phi_free,
        0.0,
        CorrectionMode::PostProcessing,
        true,
    ))?)
}

/// The dark-matter pipeline spec: chain-entangled probe, Rx signal
/// encoding, mirror disentangle with the signal population copied onto the
/// memory, then a delay. The memory reads out in Z.
fn dm_pipeline(n_dm: usize, phi: f64, tau: f64, final_readout: bool) -> PipelineSpec {
    PipelineSpec {
        n_sensing: n_dm,
        memory_enabled: true,
        scheme: PipelineScheme::RotationMemory,
        steps: vec![
            StageSpec::ProbePrep { flipped: vec![] },
            StageSpec::Sensing {
                encoding: Encoding::Rx,
                angles: vec![phi; n_dm],
            },
            StageSpec::Storage {
                correction: CorrectionMode::PostProcessing,
            },
            StageSpec::Delay { tau },
        ],
        final_readout,
    }
}

/// Ideal dark-matter detection circuit.
pub fn dm_circuit(n_dm: usize, phi: f64, tau: f64) -> Result<Circuit, ExperimentError> {
    if n_dm < 2 {
        return Err(ExperimentError::InvalidConfig(
            "dark matter needs at least two sensors".into(),
        ));
    }
    Ok(assemble_ideal(&dm_pipeline(n_dm, phi, tau, true))?)
}

/// Closed-form memory likelihood of the dark-matter circuit,
/// P(memory = 1) = sin^2(n phi / 2). Calibrated against the dense
/// simulation before the estimator relies on it (see tests).
pub fn dm_likelihood(n_dm: usize, phi: f64) -> f64 {
    (n_dm as f64 * phi / 2.0).sin().powi(2)
}

/// Post-selection pattern for the dark-matter circuit: every disentangled
/// non-signal sensor must read ground.
pub fn dm_postselect_pattern(n_dm: usize) -> Vec<(usize, u8)> {
    (1..n_dm).map(|q| (q, 0)).collect()
}

// ----------------------------------------------------------------------
// Estimation
// ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum EstimationScheme {
    /// Memory X-basis statistics, parity-corrected when the corrections
    /// were deferred to post-processing.
    Radar {
        sensor_qubits: Vec<usize>,
        memory: usize,
        correction: CorrectionMode,
    },
    /// Memory Z-basis excited-state fraction.
    DarkMatter { memory: usize },
}

/// Fraction of kept shots whose memory reads |+>, with the post-processing
/// parity correction folded in when applicable.
pub fn corrected_plus_fraction(
    counts: &OutcomeCounts,
    sensor_qubits: &[usize],
    memory: usize,
    correction: CorrectionMode,
) -> f64 {
    counts.fraction_where(|key| {
        let mem = counts.bit_of(key, memory);
        let eff = match correction {
            CorrectionMode::PhysicalZ => mem,
            CorrectionMode::PostProcessing => {
                let parity = sensor_qubits
                    .iter()
                    .fold(0u8, |acc, &q| acc ^ counts.bit_of(key, q));
                mem ^ parity
            }
        };
        eff == 0
    })
}

/// Same statistic computed exactly from a Born distribution over
/// `measured` qubits.
pub fn corrected_plus_probability(
    measured: &[usize],
    probs: &[f64],
    sensor_qubits: &[usize],
    memory: usize,
    correction: CorrectionMode,
) -> f64 {
    let pos_of = |q: usize| measured.iter().position(|&m| m == q).expect("unmeasured");
    let mem_pos = pos_of(memory);
    let sensor_pos: Vec<usize> = sensor_qubits.iter().map(|&q| pos_of(q)).collect();
    let mut p = 0.0;
    for (key, &pk) in probs.iter().enumerate() {
        let mem = (key >> mem_pos) & 1;
        let eff = match correction {
            CorrectionMode::PhysicalZ => mem,
            CorrectionMode::PostProcessing => {
                let parity = sensor_pos
                    .iter()
                    .fold(0usize, |acc, &pos| acc ^ ((key >> pos) & 1));
                mem ^ parity
            }
        };
        if eff == 0 {
            p += pk;
        }
    }
    p
}

/// Invert the memory statistics into a per-qubit phase estimate.
///
/// Radar inverts P(+) = cos^2(n phi / 2); dark matter inverts
/// P(1) = sin^2(n phi / 2). A probability estimate sitting exactly on the
/// arc-function boundary is reported as an error since the phase is then
/// unrecoverable.
pub fn estimate_phase(
    counts: &OutcomeCounts,
    scheme: &EstimationScheme,
    n_effective: usize,
) -> Result<f64, ExperimentError> {
    if counts.kept_shots == 0 {
        return Err(ExperimentError::EmptyCounts);
    }
    let (p, from_plus) = match scheme {
        EstimationScheme::Radar {
            sensor_qubits,
            memory,
            correction,
        } => (
            corrected_plus_fraction(counts, sensor_qubits, *memory, *correction),
            true,
        ),
        EstimationScheme::DarkMatter { memory } => (
            counts.fraction_where(|k| counts.bit_of(k, *memory) == 1),
            false,
        ),
    };
    invert_likelihood(p, from_plus, n_effective)
}

/// Shared arc-function inversion used by both the counts-based and
/// exact-probability paths.
pub fn invert_likelihood(
    p: f64,
    from_plus: bool,
    n_effective: usize,
) -> Result<f64, ExperimentError> {
    if !(p > 0.0 && p < 1.0) {
        // Zero signal sits at one end of each branch and still inverts
        // cleanly; the other end is genuinely ambiguous.
        if from_plus && p == 1.0 {
            return Ok(0.0);
        }
        if !from_plus && p == 0.0 {
            return Ok(0.0);
        }
        return Err(ExperimentError::EstimatorBoundary { p });
    }
    let total = if from_plus {
        2.0 * p.sqrt().acos()
    } else {
        2.0 * p.sqrt().asin()
    };
    Ok(total / n_effective as f64)
}

/// Signed accuracy percentage: 100 (1 - |est - true| / true). Exceeding
/// 100% relative error makes it negative.
pub fn accuracy(phi_est: f64, phi_true: f64) -> Result<f64, ExperimentError> {
    if phi_true == 0.0 {
        return Err(ExperimentError::ZeroTruePhase);
    }
    Ok((1.0 - (phi_est - phi_true).abs() / phi_true.abs()) * 100.0)
}

// ----------------------------------------------------------------------
// Run orchestration
// ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub kind: ExperimentKind,
    pub backend_used: BackendChoice,
    pub seed: u64,
    pub n_qubits: usize,
    pub phi_true: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub counts: OutcomeCounts,
    /// Per-qubit phase estimate; `phi_est_total` carries the aggregated
    /// branch phase.
    pub phi_est: Option<f64>,
    pub phi_est_total: Option<f64>,
    pub accuracy_pct: Option<f64>,
    pub kept_fraction: f64,
    pub overlap: Option<f64>,
    pub overlap_std_err: Option<f64>,
    pub meta: RunMeta,
}

fn run_circuit(
    circuit: &Circuit,
    backend: BackendChoice,
    shots: u64,
    seed: u64,
) -> Result<OutcomeCounts, ExperimentError> {
    match backend {
        BackendChoice::Dense => Ok(circuit.run_dense(shots, seed)?),
        BackendChoice::Trajectory => Ok(circuit.run_trajectory(shots, seed)?),
        BackendChoice::Auto => unreachable!("resolved before dispatch"),
    }
}

/// Assemble, attach noise, simulate, post-select, and estimate.
/// Fully deterministic for a fixed config.
pub fn run(config: &ExperimentConfig) -> Result<RunResult, ExperimentError> {
    config.validate()?;
    match config.kind {
        ExperimentKind::Radar => run_radar(config),
        ExperimentKind::DarkMatter => run_dark_matter(config),
        ExperimentKind::Scaling => run_scaling_once(config),
        ExperimentKind::SwapTest => run_swap(config),
    }
}

fn run_radar(config: &ExperimentConfig) -> Result<RunResult, ExperimentError> {
    let spec = radar_pipeline(
        config.n_s,
        config.n_f,
        config.phi_soil,
        config.phi_free,
        config.delay_tau,
        config.correction,
        true,
    );
    let ideal = assemble_ideal(&spec)?;
    let circuit = attach_noise(&ideal, &config.profile, &config.scope)?;
    let n_qubits = circuit.n_qubits();
    let backend = config.resolve_backend(n_qubits);
    let counts = run_circuit(&circuit, backend, config.shots, config.seed)?;
    // Every radar sensor carries signal, so there are no ground-state
    // sensors to post-select on.
    let sensors: Vec<usize> = (0..config.n_s + config.n_f).collect();
    let memory = n_qubits - 1;
    let scheme = EstimationScheme::Radar {
        sensor_qubits: sensors,
        memory,
        correction: config.correction,
    };
    let phi_est = estimate_phase(&counts, &scheme, config.n_s)?;
    let phi_true = config.phi_true();
    let acc = accuracy(phi_est, phi_true)?;
    Ok(RunResult {
        kept_fraction: counts.kept_fraction(),
        phi_est: Some(phi_est),
        phi_est_total: Some(phi_est * config.n_s as f64),
        accuracy_pct: Some(acc),
        overlap: None,
        overlap_std_err: None,
        meta: RunMeta {
            kind: config.kind,
            backend_used: backend,
            seed: config.seed,
            n_qubits,
            phi_true,
        },
        counts,
    })
}

fn run_dark_matter(config: &ExperimentConfig) -> Result<RunResult, ExperimentError> {
    let spec = dm_pipeline(config.n_dm, config.phi, config.delay_tau, true);
    let ideal = assemble_ideal(&spec)?;
    let circuit = attach_noise(&ideal, &config.profile, &config.scope)?;
    let n_qubits = circuit.n_qubits();
    let backend = config.resolve_backend(n_qubits);
    let raw = run_circuit(&circuit, backend, config.shots, config.seed)?;
    let counts = if config.post_select {
        raw.postselect(&dm_postselect_pattern(config.n_dm))?
    } else {
        raw
    };
    let memory = n_qubits - 1;
    let scheme = EstimationScheme::DarkMatter { memory };
    let phi_est = estimate_phase(&counts, &scheme, config.n_dm)?;
    let acc = accuracy(phi_est, config.phi)?;
    Ok(RunResult {
        kept_fraction: counts.kept_fraction(),
        phi_est: Some(phi_est),
        phi_est_total: Some(phi_est * config.n_dm as f64),
        accuracy_pct: Some(acc),
        overlap: None,
        overlap_std_err: None,
        meta: RunMeta {
            kind: config.kind,
            backend_used: backend,
            seed: config.seed,
            n_qubits,
            phi_true: config.phi,
        },
        counts,
    })
}

/// One repetition of a scaling-mode estimate.
fn run_scaling_once(config: &ExperimentConfig) -> Result<RunResult, ExperimentError> {
    let (phi_est, counts, n_qubits) = match config.scaling_mode {
        ScalingMode::Unentangled => {
            // N independent single-qubit interferometers sampling the same
            // Bernoulli likelihood pool into N * shots draws.
            let mut c = Circuit::new(1);
            c.h(0)
                .phase(0, config.phi)
                .measure(0, crate::measure::Basis::X);
            let counts = c.run_dense(config.shots * config.n_probes as u64, config.seed)?;
            let p_plus = counts.fraction_where(|k| k == 0);
            (invert_likelihood(p_plus, true, 1)?, counts, 1usize)
        }
        ScalingMode::Ghz => {
            let spec = PipelineSpec::single_step(
                config.n_probes,
                PipelineScheme::PhaseMemory,
                vec![
                    StageSpec::ProbePrep { flipped: vec![] },
                    StageSpec::Sensing {
                        encoding: Encoding::Phase,
                        angles: vec![config.phi; config.n_probes],
                    },
                    StageSpec::Storage {
                        correction: CorrectionMode::PostProcessing,
                    },
                ],
            );
            let circuit = assemble_ideal(&spec)?;
            let n_qubits = circuit.n_qubits();
            let counts = circuit.run_dense(config.shots, config.seed)?;
            let scheme = EstimationScheme::Radar {
                sensor_qubits: (0..config.n_probes).collect(),
                memory: n_qubits - 1,
                correction: CorrectionMode::PostProcessing,
            };
            (
                estimate_phase(&counts, &scheme, config.n_probes)?,
                counts,
                n_qubits,
            )
        }
    };
    let acc = accuracy(phi_est, config.phi)?;
    Ok(RunResult {
        kept_fraction: counts.kept_fraction(),
        phi_est: Some(phi_est),
        phi_est_total: Some(phi_est * config.n_probes as f64),
        accuracy_pct: Some(acc),
        overlap: None,
        overlap_std_err: None,
        meta: RunMeta {
            kind: config.kind,
            backend_used: BackendChoice::Dense,
            seed: config.seed,
            n_qubits,
            phi_true: config.phi,
        },
        counts,
    })
}

fn run_swap(config: &ExperimentConfig) -> Result<RunResult, ExperimentError> {
    let (sensed, reference, n_qubits) = swap_states(config)?;
    let est = crate::analysis::swap_test(
        &sensed,
        &reference,
        config.shots,
        &config.profile,
        &config.scope,
        config.seed,
    )
    .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
    Ok(RunResult {
        counts: est.counts.clone(),
        phi_est: None,
        phi_est_total: None,
        accuracy_pct: None,
        kept_fraction: 1.0,
        overlap: Some(est.overlap),
        overlap_std_err: Some(est.std_err),
        meta: RunMeta {
            kind: config.kind,
            backend_used: BackendChoice::Dense,
            seed: config.seed,
            n_qubits,
            phi_true: config.phi_true(),
        },
    })
}

/// Sensed (noisy) and reference (noiseless) memory states for the swap
/// test. Both applications run their signal through the phase-memory
/// sensing step so the ideal memory state is pure; corrections are applied
/// physically because the memory state itself must carry them.
pub fn swap_states(
    config: &ExperimentConfig,
) -> Result<(QuantumState, QuantumState, usize), ExperimentError> {
    let spec = match config.swap_base {
        SwapBase::Radar => radar_pipeline(
            config.n_s,
            config.n_f,
            config.phi_soil,
            config.phi_free,
            config.delay_tau,
            CorrectionMode::PhysicalZ,
            false,
        ),
        SwapBase::DarkMatter => PipelineSpec {
            n_sensing: config.n_dm,
            memory_enabled: true,
            scheme: PipelineScheme::PhaseMemory,
            steps: vec![
                StageSpec::ProbePrep { flipped: vec![] },
                StageSpec::Sensing {
                    encoding: Encoding::Phase,
                    angles: vec![config.phi; config.n_dm],
                },
                StageSpec::Storage {
                    correction: CorrectionMode::PhysicalZ,
                },
                StageSpec::Delay {
                    tau: config.delay_tau,
                },
            ],
            final_readout: false,
        },
    };
    let ideal = assemble_ideal(&spec)?;
    let memory = ideal.n_qubits() - 1;
    let noisy = attach_noise(&ideal, &config.profile, &config.scope)?;
    let sensed = noisy.final_state()?.partial_trace(&[memory]);
    let reference = ideal.final_state()?.partial_trace(&[memory]);
    Ok((sensed, reference, ideal.n_qubits()))
}

// ----------------------------------------------------------------------
// Scaling study
// ----------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub mean_phi_est: f64,
    /// Empirical standard deviation of the estimate over the repetitions.
    pub delta_phi: f64,
}

/// Noiseless precision-scaling study: for each probe count, repeat the
/// estimate and report its empirical spread. Estimates are drawn through a
/// binomial shortcut, which is exact because the estimator depends on the
/// counts only through one binary statistic.
pub fn scaling_experiment(
    n_list: &[usize],
    phi: f64,
    shots: u64,
    mode: ScalingMode,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<ScalingPoint>, ExperimentError> {
    use rand_distr::{Binomial, Distribution};
    assert!(!n_list.is_empty(), "empty probe list");
    assert!(repetitions >= 2, "need repetitions for a spread");
    let mut out = Vec::with_capacity(n_list.len());
    for (ni, &n) in n_list.iter().enumerate() {
        let config = ExperimentConfig::scaling(n, mode, phi);
        config.validate()?;
        let (p_success, draws, n_eff) = match mode {
            ScalingMode::Unentangled => {
                let p = (phi / 2.0).cos().powi(2);
                (p, shots * n as u64, 1usize)
            }
            ScalingMode::Ghz => {
                let spec = PipelineSpec::single_step(
                    n,
                    PipelineScheme::PhaseMemory,
                    vec![
                        StageSpec::ProbePrep { flipped: vec![] },
                        StageSpec::Sensing {
                            encoding: Encoding::Phase,
                            angles: vec![phi; n],
                        },
                        StageSpec::Storage {
                            correction: CorrectionMode::PostProcessing,
                        },
                    ],
                );
                let circuit = assemble_ideal(&spec)?;
                let (measured, probs) = circuit.measured_distribution()?;
                let memory = circuit.n_qubits() - 1;
                let sensors: Vec<usize> = (0..n).collect();
                let p = corrected_plus_probability(
                    &measured,
                    &probs,
                    &sensors,
                    memory,
                    CorrectionMode::PostProcessing,
                );
                (p, shots, n)
            }
        };
        let mut estimates = Vec::with_capacity(repetitions);
        for rep in 0..repetitions {
            let mut rng = seeded_rng(mix_seed(seed, ((ni as u64) << 32) | rep as u64));
            let k = Binomial::new(draws, p_success.clamp(0.0, 1.0))
                .unwrap()
                .sample(&mut rng);
            let p_hat = k as f64 / draws as f64;
            estimates.push(invert_likelihood(p_hat, true, n_eff)?);
        }
        out.push(ScalingPoint {
            n,
            mean_phi_est: crate::stats::mean(&estimates),
            delta_phi: crate::stats::std_dev(&estimates),
        });
    }
    Ok(out)
}

/// Fitted log-log slope of the estimate spread against the probe count.
pub fn scaling_slope(points: &[ScalingPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.delta_phi.ln()).collect();
    crate::stats::linear_fit(&xs, &ys).slope
}

// ----------------------------------------------------------------------
// Soil moisture
// ----------------------------------------------------------------------

/// Volumetric-water-content polynomial in the soil's dielectric
/// permittivity (Topp-Davis-Annan mineral-soil fit).
const TOPP: [f64; 4] = [-5.3e-2, 2.92e-2, -5.5e-4, 4.3e-6];

/// Extract the soil permittivity and volumetric water content from the two
/// phase signals: phi_soil = phi_free / sqrt(eps_soil).
pub fn soil_moisture_from_phase(
    phi_free: f64,
    phi_soil: f64,
) -> Result<(f64, f64), ExperimentError> {
    if phi_soil == 0.0 {
        return Err(ExperimentError::ZeroSoilPhase);
    }
    if phi_soil < 0.0 || phi_free < 0.0 {
        return Err(ExperimentError::InvalidConfig(
            "phase signals must be positive".into(),
        ));
    }
    let eps = (phi_free / phi_soil).powi(2);
    let vwc = TOPP[0] + TOPP[1] * eps + TOPP[2] * eps * eps + TOPP[3] * eps * eps * eps;
    Ok((eps, vwc))
}
