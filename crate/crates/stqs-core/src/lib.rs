//! Noisy gate-based quantum circuit simulation for spatiotemporal sensing
//! experiments: probe preparation, signal encoding, memory transfer, delays,
//! platform noise profiles, phase estimation, and state-comparison analytics.

pub mod analysis;
pub mod channel;
pub mod circuit;
pub mod cmat;
pub mod counts;
pub mod error;
pub mod experiment;
pub mod gate;
mod linalg;
pub mod measure;
pub mod noise;
pub mod pipeline;
pub mod state;
pub mod stats;

pub use channel::{ChannelKind, QuantumChannel};
pub use circuit::{Circuit, Instruction};
pub use counts::OutcomeCounts;
pub use error::{AnalysisError, ExperimentError, NoiseError, PipelineError, SimError};
pub use gate::{Gate, GateKind};
pub use measure::{measure, Basis, MeasurementSpec};
pub use state::{QuantumState, Role};
