//! Stage builders for the sensing pipeline: probe preparation, signal
//! encoding, storage onto a memory qubit, delays, retrieval, and readout,
//! plus the assembler that turns an ordered stage list into a runnable
//! circuit.
//!
//! Two schemes are supported. In the phase-memory scheme the probe is a GHZ
//! state whose accumulated relative phase is moved onto the memory
//! coherence; the memory reads out in the X basis. In the rotation-memory
//! scheme the probe is a chain-entangled state that concentrates a
//! collective rotation onto a signal qubit after a mirror disentangle; the
//! signal population is copied onto the memory, which reads out in Z.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::PipelineError;
use crate::gate::{Gate, GateKind};
use crate::measure::Basis;
use crate::noise::{attach_noise, NoiseProfile, NoiseScope};
use crate::state::Role;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// P(phi): signal enters as a relative phase.
    Phase,
    /// Rx(phi): signal enters as a rotation about x.
    Rx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    /// Track the parity of |-> outcomes classically and flip the memory
    /// interpretation when odd. Cheaper: no extra gates.
    PostProcessing,
    /// Apply a Z gate to the memory for every sensor measured as |->.
    PhysicalZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineScheme {
    PhaseMemory,
    RotationMemory,
}

/// One stage of the pipeline. Sensor qubit sets are managed by the
/// assembler (the current step's block), so stages carry only their
/// kind-specific parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageSpec {
    /// Entangle a fresh sensor block. `flipped` lists block-relative sensor
    /// indices that receive an X after entangling, inverting their branch
    /// assignment so their signal enters with opposite sign.
    ProbePrep { flipped: Vec<usize> },
    Sensing { encoding: Encoding, angles: Vec<f64> },
    Storage { correction: CorrectionMode },
    Delay { tau: f64 },
    /// Re-extend the stored branch from the memory onto a fresh sensor
    /// block (phase-memory scheme only).
    Retrieval,
    /// Final readout of the memory (and any live sensors).
    Processing,
}

impl StageSpec {
    fn name(&self) -> &'static str {
        match self {
            StageSpec::ProbePrep { .. } => "probe_prep",
            StageSpec::Sensing { .. } => "sensing",
            StageSpec::Storage { .. } => "storage",
            StageSpec::Delay { .. } => "delay",
            StageSpec::Retrieval => "retrieval",
            StageSpec::Processing => "processing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    /// Sensors per step.
    pub n_sensing: usize,
    pub memory_enabled: bool,
    pub scheme: PipelineScheme,
    pub steps: Vec<StageSpec>,
    /// When false no readout stage is appended, leaving every unmeasured
    /// qubit's state inspectable.
    pub final_readout: bool,
}

impl PipelineSpec {
    pub fn single_step(n_sensing: usize, scheme: PipelineScheme, steps: Vec<StageSpec>) -> Self {
        Self {
            n_sensing,
            memory_enabled: true,
            scheme,
            steps,
            final_readout: true,
        }
    }
}

// ----------------------------------------------------------------------
// Stage builders
// ----------------------------------------------------------------------

/// H on the first qubit followed by a CNOT chain: the n-qubit GHZ state.
pub fn build_probe_prep(circuit: &mut Circuit, sensors: &[usize]) -> Result<(), PipelineError> {
    if sensors.is_empty() {
        return Err(PipelineError::NoSensors);
    }
    circuit.h(sensors[0]);
    for w in sensors.windows(2) {
        circuit.cnot(w[0], w[1]);
    }
    Ok(())
}

/// Chain entangler of the rotation-memory scheme: H on every sensor but the
/// first, then CNOTs cascading toward the signal qubit.
fn build_chain_prep(circuit: &mut Circuit, sensors: &[usize]) -> Result<(), PipelineError> {
    if sensors.is_empty() {
        return Err(PipelineError::NoSensors);
    }
    for &s in &sensors[1..] {
        circuit.h(s);
    }
    for i in 1..sensors.len() {
        circuit.cnot(sensors[i], sensors[i - 1]);
    }
    Ok(())
}

/// Mirror of `build_chain_prep`: descending CNOT chain, then H undo. After
/// this the collective rotation sits on the signal qubit and every other
/// sensor is back in |0>.
fn build_chain_unwind(circuit: &mut Circuit, sensors: &[usize]) {
    for i in (1..sensors.len()).rev() {
        circuit.cnot(sensors[i], sensors[i - 1]);
    }
    for &s in &sensors[1..] {
        circuit.h(s);
    }
}

/// Apply the per-qubit signal encoding.
pub fn build_sensing(
    circuit: &mut Circuit,
    qubits: &[usize],
    encoding: Encoding,
    angles: &[f64],
) -> Result<(), PipelineError> {
    if angles.len() != qubits.len() {
        return Err(PipelineError::AngleCountMismatch {
            expected: qubits.len(),
            got: angles.len(),
        });
    }
    for (&q, &phi) in qubits.iter().zip(angles.iter()) {
        match encoding {
            Encoding::Phase => circuit.phase(q, phi),
            Encoding::Rx => circuit.rx(q, phi),
        };
    }
    Ok(())
}

/// Move the sensors' accumulated branch phase onto the memory coherence:
/// a CNOT from the first sensor (skipped when the memory already holds the
/// branch), X-basis measurement of every sensor, then parity correction.
/// Noiselessly the memory ends in (|0> + e^{i dphi}|1>)/sqrt(2).
pub fn build_storage(
    circuit: &mut Circuit,
    sensors: &[usize],
    memory: usize,
    correction: CorrectionMode,
    memory_already_entangled: bool,
) -> Result<(), PipelineError> {
    if sensors.is_empty() {
        return Err(PipelineError::NoSensors);
    }
    if !memory_already_entangled {
        circuit.cnot(sensors[0], memory);
    }
    for &s in sensors {
        circuit.measure(s, Basis::X);
    }
    if correction == CorrectionMode::PhysicalZ {
        for &s in sensors {
            circuit.conditional(s, 1, Gate::new(GateKind::Z, vec![memory]).unwrap());
        }
    }
    Ok(())
}

/// Rotation-memory storage: unwind the chain, copy the signal qubit's
/// population onto the memory, and read the sensors out in Z.
fn build_rotation_storage(circuit: &mut Circuit, sensors: &[usize], memory: usize) {
    build_chain_unwind(circuit, sensors);
    circuit.cnot(sensors[0], memory);
    for &s in sensors {
        circuit.measure(s, Basis::Z);
    }
}

/// diag(1, e^{i tau}) on the memory qubit. Decoherence over the wall time
/// is inserted by the noise attachment policy, not here.
pub fn build_delay(circuit: &mut Circuit, memory: usize, tau: f64) {
    circuit.delay(memory, tau);
}

/// Fan the stored branch out from the memory onto fresh sensors, re-extending
/// the entangled probe so the next sensing step adds phase coherently.
pub fn build_retrieval(
    circuit: &mut Circuit,
    memory: usize,
    fresh_sensors: &[usize],
) -> Result<(), PipelineError> {
    if fresh_sensors.is_empty() {
        return Err(PipelineError::NoSensors);
    }
    for &f in fresh_sensors {
        circuit.cnot(memory, f);
    }
    Ok(())
}

// ----------------------------------------------------------------------
// Assembler
// ----------------------------------------------------------------------

/// Concatenate the stages of a pipeline into an ideal (noise-free) circuit.
///
/// Sensor blocks are allocated per entangling stage: step `k`'s sensors
/// occupy indices `[k*n, (k+1)*n)` and the memory qubit always takes the
/// highest index.
pub fn assemble_ideal(spec: &PipelineSpec) -> Result<Circuit, PipelineError> {
    if spec.steps.is_empty() {
        return Err(PipelineError::EmptyPipeline);
    }
    if spec.n_sensing == 0 {
        return Err(PipelineError::NoSensors);
    }
    let blocks = spec
        .steps
        .iter()
        .filter(|s| matches!(s, StageSpec::ProbePrep { .. } | StageSpec::Retrieval))
        .count()
        .max(1);
    let n_sensor_qubits = blocks * spec.n_sensing;
    let n_qubits = n_sensor_qubits + usize::from(spec.memory_enabled);
    let memory = n_sensor_qubits;

    let mut roles = vec![Role::Sensing; n_sensor_qubits];
    if spec.memory_enabled {
        roles.push(Role::Memory);
    }
    let mut circuit = Circuit::new(n_qubits).with_roles(roles);

    let mut live: Option<Vec<usize>> = None;
    let mut entangled = false;
    let mut memory_entangled = false;
    let mut memory_used = false;
    let mut next_block = 0usize;
    let mut processed = false;

    let bad = |index: usize, stage: &StageSpec, reason: &str| {
        Err(PipelineError::BadStageOrder {
            index,
            stage: stage.name().to_string(),
            reason: reason.to_string(),
        })
    };

    for (index, stage) in spec.steps.iter().enumerate() {
        if processed {
            return bad(index, stage, "processing must be the final stage");
        }
        match stage {
            StageSpec::ProbePrep { flipped } => {
                if live.is_some() {
                    return bad(index, stage, "previous sensor block still live");
                }
                if next_block > 0 && spec.scheme == PipelineScheme::PhaseMemory {
                    return bad(
                        index,
                        stage,
                        "later steps must retrieve the stored branch, not re-prepare",
                    );
                }
                let block: Vec<usize> =
                    (next_block * spec.n_sensing..(next_block + 1) * spec.n_sensing).collect();
                next_block += 1;
                match spec.scheme {
                    PipelineScheme::PhaseMemory => build_probe_prep(&mut circuit, &block)?,
                    PipelineScheme::RotationMemory => build_chain_prep(&mut circuit, &block)?,
                }
                for &rel in flipped {
                    if rel >= block.len() {
                        return bad(index, stage, "flip index outside the sensor block");
                    }
                    circuit.x(block[rel]);
                }
                live = Some(block);
                entangled = true;
            }
            StageSpec::Sensing { encoding, angles } => {
                let Some(block) = &live else {
                    return bad(index, stage, "no live sensors to encode onto");
                };
                build_sensing(&mut circuit, block, *encoding, angles)?;
            }
            StageSpec::Storage { correction } => {
                if !spec.memory_enabled {
                    return Err(PipelineError::MemoryDisabled);
                }
                let Some(block) = live.take() else {
                    return bad(index, stage, "no live sensors to store");
                };
                if !entangled {
                    return bad(index, stage, "sensors are not entangled");
                }
                match spec.scheme {
                    PipelineScheme::PhaseMemory => {
                        build_storage(&mut circuit, &block, memory, *correction, memory_entangled)?;
                    }
                    PipelineScheme::RotationMemory => {
                        build_rotation_storage(&mut circuit, &block, memory);
                    }
                }
                memory_entangled = true;
                memory_used = true;
                entangled = false;
            }
            StageSpec::Delay { tau } => {
                if !spec.memory_enabled {
                    return Err(PipelineError::MemoryDisabled);
                }
                build_delay(&mut circuit, memory, *tau);
                memory_used = true;
            }
            StageSpec::Retrieval => {
                if !spec.memory_enabled {
                    return Err(PipelineError::MemoryDisabled);
                }
                if spec.scheme == PipelineScheme::RotationMemory {
                    return bad(
                        index,
                        stage,
                        "population storage cannot fan back out; start a fresh probe",
                    );
                }
                if !memory_entangled {
                    return bad(index, stage, "nothing stored yet");
                }
                if live.is_some() {
                    return bad(index, stage, "previous sensor block still live");
                }
                let block: Vec<usize> =
                    (next_block * spec.n_sensing..(next_block + 1) * spec.n_sensing).collect();
                next_block += 1;
                build_retrieval(&mut circuit, memory, &block)?;
                live = Some(block);
                entangled = true;
            }
            StageSpec::Processing => {
                append_processing(&mut circuit, spec, &mut live, memory);
                processed = true;
            }
        }
    }
    if !processed && spec.final_readout {
        append_processing(&mut circuit, spec, &mut live, memory);
    }
    if spec.memory_enabled && !memory_used {
        return Err(PipelineError::BadStageOrder {
            index: spec.steps.len(),
            stage: "processing".into(),
            reason: "memory enabled but never used; add a storage or delay stage".into(),
        });
    }
    Ok(circuit)
}

fn append_processing(
    circuit: &mut Circuit,
    spec: &PipelineSpec,
    live: &mut Option<Vec<usize>>,
    memory: usize,
) {
    let basis = match spec.scheme {
        PipelineScheme::PhaseMemory => Basis::X,
        PipelineScheme::RotationMemory => Basis::Z,
    };
    if let Some(block) = live.take() {
        for q in block {
            circuit.measure(q, basis);
        }
    }
    if spec.memory_enabled {
        circuit.measure(memory, basis);
    }
}

/// Assemble and attach noise: the runnable circuit.
pub fn assemble(
    spec: &PipelineSpec,
    profile: &NoiseProfile,
    scope: &NoiseScope,
) -> Result<Circuit, PipelineError> {
    let ideal = assemble_ideal(spec)?;
    Ok(attach_noise(&ideal, profile, scope)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::QuantumState;
    use num_complex::Complex64;

    fn ghz_circuit(n: usize) -> Circuit {
        let mut c = Circuit::new(n);
        build_probe_prep(&mut c, &(0..n).collect::<Vec<_>>()).unwrap();
        c
    }

    fn analytic_ghz(n: usize) -> QuantumState {
        let dim = 1usize << n;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0] = s;
        amps[dim - 1] = s;
        QuantumState::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn probe_prep_single_qubit_is_plus() {
        let state = ghz_circuit(1).final_state().unwrap();
        let a = state.amplitudes().unwrap();
        assert!((a[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((a[1].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn probe_prep_matches_analytic_ghz_up_to_ten() {
        for n in 2..=10 {
            let built = ghz_circuit(n).final_state().unwrap();
            let fidelity = built.overlap_pure(&analytic_ghz(n));
            assert!((fidelity - 1.0).abs() < 1e-10, "n = {n}: {fidelity}");
        }
    }

    #[test]
    fn phase_angles_aggregate_globally() {
        // Distributed phases on a GHZ state equal their sum on one qubit.
        let angles = [0.3, -0.2, 0.9];
        let mut c1 = Circuit::new(3);
        build_probe_prep(&mut c1, &[0, 1, 2]).unwrap();
        build_sensing(&mut c1, &[0, 1, 2], Encoding::Phase, &angles).unwrap();
        let mut c2 = Circuit::new(3);
        build_probe_prep(&mut c2, &[0, 1, 2]).unwrap();
        build_sensing(&mut c2, &[1], Encoding::Phase, &[angles.iter().sum()]).unwrap();
        let s1 = c1.final_state().unwrap();
        let s2 = c2.final_state().unwrap();
        assert!((s1.overlap_pure(&s2) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_angles_are_identity() {
        let mut c1 = Circuit::new(2);
        build_probe_prep(&mut c1, &[0, 1]).unwrap();
        build_sensing(&mut c1, &[0, 1], Encoding::Phase, &[0.0, 0.0]).unwrap();
        let mut c2 = Circuit::new(2);
        build_probe_prep(&mut c2, &[0, 1]).unwrap();
        let s1 = c1.final_state().unwrap();
        let s2 = c2.final_state().unwrap();
        assert!((s1.overlap_pure(&s2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angle_count_mismatch_rejected() {
        let mut c = Circuit::new(2);
        build_probe_prep(&mut c, &[0, 1]).unwrap();
        assert!(matches!(
            build_sensing(&mut c, &[0, 1], Encoding::Phase, &[0.1]),
            Err(PipelineError::AngleCountMismatch { .. })
        ));
    }

    #[test]
    fn storage_with_zero_phase_leaves_memory_in_plus() {
        let mut c = Circuit::new(4);
        build_probe_prep(&mut c, &[0, 1, 2]).unwrap();
        build_storage(&mut c, &[0, 1, 2], 3, CorrectionMode::PhysicalZ, false).unwrap();
        let state = c.final_state().unwrap();
        let mem = state.partial_trace(&[3]);
        let m = mem.density_matrix();
        // |+><+|: all entries 1/2.
        for v in m {
            assert!((v.re - 0.5).abs() < 1e-10 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn storage_transfers_summed_phase() {
        let angles = [0.4, 0.7, -0.3];
        let mut c = Circuit::new(4);
        build_probe_prep(&mut c, &[0, 1, 2]).unwrap();
        build_sensing(&mut c, &[0, 1, 2], Encoding::Phase, &angles).unwrap();
        build_storage(&mut c, &[0, 1, 2], 3, CorrectionMode::PhysicalZ, false).unwrap();
        let phase = c.final_state().unwrap().partial_trace(&[3]).relative_phase();
        let expected: f64 = angles.iter().sum();
        assert!((phase - expected).abs() < 1e-10, "{phase} vs {expected}");
    }

    #[test]
    fn storage_disentangles_sensors_into_x_eigenstates() {
        let mut c = Circuit::new(4);
        build_probe_prep(&mut c, &[0, 1, 2]).unwrap();
        build_sensing(&mut c, &[0, 1, 2], Encoding::Phase, &[0.5, 0.1, 0.2]).unwrap();
        build_storage(&mut c, &[0, 1, 2], 3, CorrectionMode::PhysicalZ, false).unwrap();
        let state = c.final_state().unwrap();
        for q in 0..3 {
            let red = state.partial_trace(&[q]).density_matrix();
            // A pure X eigenstate has diagonal 1/2 and off-diagonal +-1/2.
            assert!((red[0].re - 0.5).abs() < 1e-10);
            assert!(
                (red[1].norm() - 0.5).abs() < 1e-10,
                "qubit {q} not an X eigenstate"
            );
            assert!(red[1].im.abs() < 1e-10);
        }
    }

    #[test]
    fn correction_modes_have_identical_statistics() {
        let spec = |corr| {
            PipelineSpec::single_step(
                3,
                PipelineScheme::PhaseMemory,
                vec![
                    StageSpec::ProbePrep { flipped: vec![] },
                    StageSpec::Sensing {
                        encoding: Encoding::Phase,
                        angles: vec![0.3, 0.2, 0.25],
                    },
                    StageSpec::Storage { correction: corr },
                ],
            )
        };
        let phys = assemble_ideal(&spec(CorrectionMode::PhysicalZ)).unwrap();
        let post = assemble_ideal(&spec(CorrectionMode::PostProcessing)).unwrap();
        let (m_phys, p_phys) = phys.measured_distribution().unwrap();
        let (m_post, p_post) = post.measured_distribution().unwrap();
        assert_eq!(m_phys, m_post);
        // The post-processing convention maps onto the physical one by
        // XORing the memory bit (bit 3) with the sensor parity.
        let mut remapped = vec![0.0; p_post.len()];
        for (key, &p) in p_post.iter().enumerate() {
            let parity = (key & 0b0111).count_ones() as usize & 1;
            let flipped = key ^ (parity << 3);
            remapped[flipped] += p;
        }
        for (a, b) in p_phys.iter().zip(remapped.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn delay_is_pure_phase() {
        let mut c = Circuit::new(1);
        c.h(0);
        build_delay(&mut c, 0, 0.0);
        let s = c.final_state().unwrap();
        assert!((s.relative_phase()).abs() < 1e-12);

        let mut c2 = Circuit::new(1);
        c2.h(0);
        build_delay(&mut c2, 0, 1.3);
        assert!((c2.final_state().unwrap().relative_phase() - 1.3).abs() < 1e-12);

        // tau = pi turns |+> into |->.
        let mut c3 = Circuit::new(1);
        c3.h(0);
        build_delay(&mut c3, 0, std::f64::consts::PI);
        let a = c3.final_state().unwrap();
        let amps = a.amplitudes().unwrap();
        assert!((amps[1].re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn retrieval_fans_plus_into_ghz() {
        // memory (qubit 2) in |+>, two fresh sensors -> 3-qubit GHZ.
        let mut c = Circuit::new(3);
        c.h(2);
        build_retrieval(&mut c, 2, &[0, 1]).unwrap();
        let s = c.final_state().unwrap();
        assert!((s.overlap_pure(&analytic_ghz(3)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trivial_storage_then_retrieval_rebuilds_the_probe() {
        // Store a zero-phase branch, retrieve onto fresh sensors: the fresh
        // block plus memory is again a GHZ state.
        let spec = PipelineSpec {
            n_sensing: 2,
            memory_enabled: true,
            scheme: PipelineScheme::PhaseMemory,
            steps: vec![
                StageSpec::ProbePrep { flipped: vec![] },
                StageSpec::Storage {
                    correction: CorrectionMode::PhysicalZ,
                },
                StageSpec::Retrieval,
            ],
            final_readout: false,
        };
        let c = assemble_ideal(&spec).unwrap();
        let state = c.final_state().unwrap();
        // Fresh block = qubits 2, 3; memory = 4.
        let red = state.partial_trace(&[2, 3, 4]);
        let ghz = analytic_ghz(3).density_matrix();
        let got = red.density_matrix();
        let max_diff = ghz
            .iter()
            .zip(got.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-10, "max diff {max_diff}");
    }

    #[test]
    fn two_step_pipeline_adds_phases_and_delay() {
        let (d1, d2, tau) = (0.31, 0.17, 0.23);
        let spec = PipelineSpec {
            n_sensing: 3,
            memory_enabled: true,
            scheme: PipelineScheme::PhaseMemory,
            steps: vec![
                StageSpec::ProbePrep { flipped: vec![] },
                StageSpec::Sensing {
                    encoding: Encoding::Phase,
                    angles: vec![d1 / 3.0; 3],
                },
                StageSpec::Storage {
                    correction: CorrectionMode::PhysicalZ,
                },
                StageSpec::Delay { tau },
                StageSpec::Retrieval,
                StageSpec::Sensing {
                    encoding: Encoding::Phase,
                    angles: vec![d2 / 3.0; 3],
                },
                StageSpec::Storage {
                    correction: CorrectionMode::PhysicalZ,
                },
            ],
            final_readout: false,
        };
        let c = assemble_ideal(&spec).unwrap();
        let state = c.final_state().unwrap();
        let phase = state.partial_trace(&[6]).relative_phase();
        assert!(
            (phase - (d1 + d2 + tau)).abs() < 1e-9,
            "{phase} vs {}",
            d1 + d2 + tau
        );
    }

    #[test]
    fn phase_additivity_over_random_multistep_pipelines() {
        use rand::Rng;
        let mut rng = crate::stats::seeded_rng(4242);
        for _ in 0..8 {
            let n = rng.random_range(2..=4usize);
            let k = rng.random_range(1..=3usize);
            let mut steps = Vec::new();
            let mut expected = 0.0f64;
            for step in 0..k {
                if step == 0 {
                    steps.push(StageSpec::ProbePrep { flipped: vec![] });
                } else {
                    steps.push(StageSpec::Retrieval);
                }
                let delta: f64 = rng.random_range(0.05..0.5);
                expected += delta;
                steps.push(StageSpec::Sensing {
                    encoding: Encoding::Phase,
                    angles: vec![delta / n as f64; n],
                });
                steps.push(StageSpec::Storage {
                    correction: CorrectionMode::PhysicalZ,
                });
                let tau: f64 = rng.random_range(0.0..0.5);
                expected += tau;
                steps.push(StageSpec::Delay { tau });
            }
            let spec = PipelineSpec {
                n_sensing: n,
                memory_enabled: true,
                scheme: PipelineScheme::PhaseMemory,
                steps,
                final_readout: false,
            };
            let c = assemble_ideal(&spec).unwrap();
            let memory = c.n_qubits() - 1;
            let phase = c
                .final_state()
                .unwrap()
                .partial_trace(&[memory])
                .relative_phase();
            let wrapped = (phase - expected + std::f64::consts::PI)
                .rem_euclid(2.0 * std::f64::consts::PI)
                - std::f64::consts::PI;
            assert!(wrapped.abs() < 1e-9, "n={n} k={k}: {phase} vs {expected}");
        }
    }

    #[test]
    fn empty_pipeline_rejected() {
        let spec = PipelineSpec::single_step(2, PipelineScheme::PhaseMemory, vec![]);
        assert!(matches!(
            assemble_ideal(&spec),
            Err(PipelineError::EmptyPipeline)
        ));
    }

    #[test]
    fn retrieval_before_storage_rejected() {
        let spec =
            PipelineSpec::single_step(2, PipelineScheme::PhaseMemory, vec![StageSpec::Retrieval]);
        assert!(matches!(
            assemble_ideal(&spec),
            Err(PipelineError::BadStageOrder { .. })
        ));
    }

    #[test]
    fn storage_without_memory_rejected() {
        let spec = PipelineSpec {
            n_sensing: 2,
            memory_enabled: false,
            scheme: PipelineScheme::PhaseMemory,
            steps: vec![
                StageSpec::ProbePrep { flipped: vec![] },
                StageSpec::Storage {
                    correction: CorrectionMode::PostProcessing,
                },
            ],
            final_readout: false,
        };
        assert!(matches!(
            assemble_ideal(&spec),
            Err(PipelineError::MemoryDisabled)
        ));
    }
}
