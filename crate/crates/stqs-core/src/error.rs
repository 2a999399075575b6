//! Error types for the simulation layers.

use thiserror::Error;

/// Errors from state, gate, channel, measurement, and circuit operations.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("qubit {qubit} out of range for {n_qubits}-qubit system")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("gate arity mismatch: expected {expected} targets, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("duplicate target qubit in gate")]
    DuplicateTarget,

    #[error("state is not normalized: deviation {0:.3e}")]
    NotNormalized(f64),

    #[error("density matrix invalid: {0}")]
    InvalidDensity(String),

    #[error("Kraus set is not trace preserving: max deviation {0:.3e}")]
    NotTracePreserving(f64),

    #[error("channel arity {arity} does not match {targets} target qubits")]
    ChannelArityMismatch { arity: usize, targets: usize },

    #[error("thermal relaxation requires t >= 0, T1 > 0, T2 > 0 (got t={t}, T1={t1}, T2={t2})")]
    BadRelaxationParams { t: f64, t1: f64, t2: f64 },

    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),

    #[error("measurement with zero shots")]
    ZeroShots,

    #[error("outcome probabilities sum to {0}, expected 1 within 1e-8 (state corrupted upstream)")]
    BadProbabilitySum(f64),

    #[error("qubit {0} measured twice")]
    DoubleMeasurement(usize),

    #[error("operation on qubit {0} after it was measured")]
    OperationAfterMeasurement(usize),

    #[error("classically controlled gate on qubit {0} whose control was never measured")]
    ControlNotMeasured(usize),

    #[error("post-selection pattern references unmeasured qubit {0}")]
    PatternQubitUnmeasured(usize),

    #[error("post-selection removed every shot")]
    EmptySelection,

    #[error("circuit has no measurements to sample")]
    NothingMeasured,

    #[error("trajectory branch probabilities vanished (numerical underflow)")]
    BranchUnderflow,

    #[error("mixed initial states are only supported by the dense backend")]
    MixedInitialState,

    #[error("initial state has {got} qubits, circuit expects {expected}")]
    InitialStateMismatch { expected: usize, got: usize },
}

/// Errors from noise-profile construction and circuit noise attachment.
#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("unknown platform '{0}'")]
    UnknownPlatform(String),

    #[error("noise profile invalid: {0}")]
    InvalidProfile(String),

    #[error("epsilon {0} outside [0, 1]")]
    BadEpsilon(f64),

    #[error("circuit already has noise attached")]
    AlreadyNoisy,

    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Errors from pipeline assembly.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("pipeline has no stages")]
    EmptyPipeline,

    #[error("pipeline needs at least one sensing qubit")]
    NoSensors,

    #[error("stage {index} ({stage}) is invalid here: {reason}")]
    BadStageOrder {
        index: usize,
        stage: String,
        reason: String,
    },

    #[error("sensing stage expects {expected} angles, got {got}")]
    AngleCountMismatch { expected: usize, got: usize },

    #[error("storage, retrieval, and delay stages require an enabled memory qubit")]
    MemoryDisabled,

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Errors from experiment configuration and execution.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("signal outside the estimator's inversion domain: N*dphi = {0} must lie in (0, pi)")]
    InversionDomain(f64),

    #[error("estimated probability {p} is at the arc-function boundary; phase unrecoverable")]
    EstimatorBoundary { p: f64 },

    #[error("no counts to estimate from")]
    EmptyCounts,

    #[error("accuracy undefined for phi_true = 0")]
    ZeroTruePhase,

    #[error("soil phase must be nonzero")]
    ZeroSoilPhase,

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Noise(#[from] NoiseError),

    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Errors from analysis routines.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("register width mismatch: {0} vs {1} qubits")]
    WidthMismatch(usize, usize),

    #[error("matrix dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("input is not a valid density matrix: {0}")]
    BadDensity(String),

    #[error("finite-difference step {0} too small for stable differentiation")]
    StepTooSmall(f64),

    #[error("cost function returned a non-finite value")]
    NonFiniteCost,

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Noise(#[from] NoiseError),

    #[error(transparent)]
    Pipeline(#[from] PipelineError),

    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}
