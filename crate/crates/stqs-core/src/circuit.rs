//! Ordered instruction lists and the two simulation backends.
//!
//! The dense backend evolves the exact state (pure until the first channel
//! promotes it to a density matrix) and samples outcomes from the final
//! joint distribution. Classically controlled corrections run as deferred
//! controlled gates, which is exact because nothing non-diagonal may touch a
//! qubit after its measurement.
//!
//! The trajectory backend unravels channels stochastically: one Kraus branch
//! per channel per shot, sampled with probability ||K psi||^2. Shots run in
//! parallel with per-shot RNG streams derived from (seed, shot index), so
//! results do not depend on scheduling.

use rayon::prelude::*;

use crate::channel::{ChannelKind, QuantumChannel};
use crate::counts::OutcomeCounts;
use crate::error::SimError;
use crate::gate::{Gate, GateKind};
use crate::measure::{apply_readout_flips, sample_multinomial, Basis};
use crate::state::{QuantumState, Role};
use crate::stats::{mix_seed, seeded_rng};

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    Channel {
        channel: QuantumChannel,
        targets: Vec<usize>,
    },
    Measure {
        qubit: usize,
        basis: Basis,
    },
    /// Apply `gate` iff the recorded outcome of `control` equals `value`.
    Conditional {
        control: usize,
        value: u8,
        gate: Gate,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    roles: Vec<Role>,
    instructions: Vec<Instruction>,
    /// Per-qubit classical readout flip rates (p_{0->1}, p_{1->0}).
    readout: Vec<(f64, f64)>,
    noise_attached: bool,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            roles: vec![Role::Sensing; n_qubits],
            instructions: Vec::new(),
            readout: vec![(0.0, 0.0); n_qubits],
            noise_attached: false,
        }
    }

    pub fn with_roles(mut self, roles: Vec<Role>) -> Self {
        assert_eq!(roles.len(), self.n_qubits);
        self.roles = roles;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn readout(&self) -> &[(f64, f64)] {
        &self.readout
    }

    pub fn noise_attached(&self) -> bool {
        self.noise_attached
    }

    pub(crate) fn set_noise_attached(&mut self) {
        self.noise_attached = true;
    }

    pub(crate) fn from_parts(
        n_qubits: usize,
        roles: Vec<Role>,
        instructions: Vec<Instruction>,
        readout: Vec<(f64, f64)>,
    ) -> Self {
        Self {
            n_qubits,
            roles,
            instructions,
            readout,
            noise_attached: false,
        }
    }

    // ---------------------------------------------------------------
    // Builder methods. Index errors are programmer errors here; user
    // inputs are validated upstream at config parsing.
    // ---------------------------------------------------------------

    pub fn push(&mut self, instr: Instruction) -> &mut Self {
        self.instructions.push(instr);
        self
    }

    pub fn gate(&mut self, kind: GateKind, targets: Vec<usize>) -> &mut Self {
        let g = Gate::new(kind, targets).expect("malformed gate");
        g.validate_for(self.n_qubits).expect("gate target out of range");
        self.push(Instruction::Gate(g))
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::H, vec![q])
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::X, vec![q])
    }

    pub fn z(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::Z, vec![q])
    }

    pub fn phase(&mut self, q: usize, phi: f64) -> &mut Self {
        self.gate(GateKind::P(phi), vec![q])
    }

    pub fn rx(&mut self, q: usize, phi: f64) -> &mut Self {
        self.gate(GateKind::Rx(phi), vec![q])
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.gate(GateKind::Cnot, vec![control, target])
    }

    pub fn cswap(&mut self, control: usize, a: usize, b: usize) -> &mut Self {
        self.gate(GateKind::Cswap, vec![control, a, b])
    }

    pub fn delay(&mut self, q: usize, tau: f64) -> &mut Self {
        self.gate(GateKind::Delay(tau), vec![q])
    }

    pub fn channel(&mut self, channel: QuantumChannel, targets: Vec<usize>) -> &mut Self {
        assert_eq!(channel.arity(), targets.len(), "channel arity mismatch");
        self.push(Instruction::Channel { channel, targets })
    }

    pub fn measure(&mut self, qubit: usize, basis: Basis) -> &mut Self {
        assert!(qubit < self.n_qubits);
        self.push(Instruction::Measure { qubit, basis })
    }

    /// Classically controlled gate keyed on an earlier measurement outcome.
    pub fn conditional(&mut self, control: usize, value: u8, gate: Gate) -> &mut Self {
        self.push(Instruction::Conditional {
            control,
            value,
            gate,
        })
    }

    /// Measured qubits in ascending index order.
    pub fn measured_qubits(&self) -> Vec<usize> {
        let mut qs: Vec<usize> = self
            .instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Measure { qubit, .. } => Some(*qubit),
                _ => None,
            })
            .collect();
        qs.sort_unstable();
        qs
    }

    pub fn has_channels(&self) -> bool {
        self.instructions
            .iter()
            .any(|i| matches!(i, Instruction::Channel { .. }))
    }

    /// Structural validation shared by both backends.
    pub fn validate(&self) -> Result<(), SimError> {
        let mut measured = vec![false; self.n_qubits];
        for instr in &self.instructions {
            match instr {
                Instruction::Gate(g) => {
                    g.validate_for(self.n_qubits)?;
                    for &t in &g.targets {
                        if measured[t] {
                            return Err(SimError::OperationAfterMeasurement(t));
                        }
                    }
                }
                Instruction::Channel { channel, targets } => {
                    if channel.arity() != targets.len() {
                        return Err(SimError::ChannelArityMismatch {
                            arity: channel.arity(),
                            targets: targets.len(),
                        });
                    }
                    for &t in targets {
                        if t >= self.n_qubits {
                            return Err(SimError::QubitOutOfRange {
                                qubit: t,
                                n_qubits: self.n_qubits,
                            });
                        }
                        if measured[t] {
                            return Err(SimError::OperationAfterMeasurement(t));
                        }
                    }
                }
                Instruction::Measure { qubit, .. } => {
                    if *qubit >= self.n_qubits {
                        return Err(SimError::QubitOutOfRange {
                            qubit: *qubit,
                            n_qubits: self.n_qubits,
                        });
                    }
                    if measured[*qubit] {
                        return Err(SimError::DoubleMeasurement(*qubit));
                    }
                    measured[*qubit] = true;
                }
                Instruction::Conditional { control, gate, .. } => {
                    gate.validate_for(self.n_qubits)?;
                    if *control >= self.n_qubits {
                        return Err(SimError::QubitOutOfRange {
                            qubit: *control,
                            n_qubits: self.n_qubits,
                        });
                    }
                    if !measured[*control] {
                        return Err(SimError::ControlNotMeasured(*control));
                    }
                    for &t in &gate.targets {
                        if measured[t] {
                            return Err(SimError::OperationAfterMeasurement(t));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    // ---------------------------------------------------------------
    // Dense backend
    // ---------------------------------------------------------------

    /// Evolve the exact state without sampling. Measurements contribute
    /// their basis rotation; outcome correlations stay in the state.
    pub fn final_state(&self) -> Result<QuantumState, SimError> {
        self.final_state_from(&QuantumState::zero(self.n_qubits).with_roles(self.roles.clone()))
    }

    pub fn final_state_from(&self, initial: &QuantumState) -> Result<QuantumState, SimError> {
        self.validate()?;
        if initial.n_qubits() != self.n_qubits {
            return Err(SimError::InitialStateMismatch {
                expected: self.n_qubits,
                got: initial.n_qubits(),
            });
        }
        let mut state = initial.clone();
        for instr in &self.instructions {
            match instr {
                Instruction::Gate(g) => state.apply_gate(g)?,
                Instruction::Channel { channel, targets } => {
                    state.apply_channel(channel, targets)?
                }
                Instruction::Measure { qubit, basis } => {
                    if *basis == Basis::X {
                        state.apply_gate(&Gate::new(GateKind::H, vec![*qubit]).unwrap())?;
                    }
                }
                Instruction::Conditional {
                    control,
                    value,
                    gate,
                } => state.apply_controlled(*control, *value, gate),
            }
        }
        Ok(state)
    }

    /// Exact Born distribution over the measured qubits, before readout
    /// errors. Outcome index bit `j` is the value of `measured()[j]`.
    pub fn measured_distribution(&self) -> Result<(Vec<usize>, Vec<f64>), SimError> {
        let measured = self.measured_qubits();
        if measured.is_empty() {
            return Err(SimError::NothingMeasured);
        }
        let state = self.final_state()?;
        let probs = state.marginal(&measured);
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(SimError::BadProbabilitySum(total));
        }
        Ok((measured, probs))
    }

    /// Exact outcome distribution with the classical readout flips folded in.
    pub fn measured_distribution_with_readout(&self) -> Result<(Vec<usize>, Vec<f64>), SimError> {
        let (measured, mut probs) = self.measured_distribution()?;
        for (j, &q) in measured.iter().enumerate() {
            let (p01, p10) = self.readout[q];
            if p01 == 0.0 && p10 == 0.0 {
                continue;
            }
            let bit = 1usize << j;
            for key in 0..probs.len() {
                if key & bit != 0 {
                    continue;
                }
                let p0 = probs[key];
                let p1 = probs[key | bit];
                probs[key] = p0 * (1.0 - p01) + p1 * p10;
                probs[key | bit] = p0 * p01 + p1 * (1.0 - p10);
            }
        }
        Ok((measured, probs))
    }

    /// Simulate exactly, then sample `shots` outcomes and apply readout
    /// flips. Deterministic for a fixed seed.
    pub fn run_dense(&self, shots: u64, seed: u64) -> Result<OutcomeCounts, SimError> {
        if shots == 0 {
            return Err(SimError::ZeroShots);
        }
        let (measured, probs) = self.measured_distribution()?;
        let readout: Vec<(f64, f64)> = measured.iter().map(|&q| self.readout[q]).collect();
        let mut rng = seeded_rng(seed);
        let raw = sample_multinomial(&probs, shots, &mut rng);
        Ok(apply_readout_flips(&raw, &measured, &readout, &mut rng))
    }

    /// Dense run from a caller-supplied initial state (pure or mixed).
    pub fn run_dense_from(
        &self,
        initial: &QuantumState,
        shots: u64,
        seed: u64,
    ) -> Result<OutcomeCounts, SimError> {
        if shots == 0 {
            return Err(SimError::ZeroShots);
        }
        let measured = self.measured_qubits();
        if measured.is_empty() {
            return Err(SimError::NothingMeasured);
        }
        let state = self.final_state_from(initial)?;
        let probs = state.marginal(&measured);
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(SimError::BadProbabilitySum(total));
        }
        let readout: Vec<(f64, f64)> = measured.iter().map(|&q| self.readout[q]).collect();
        let mut rng = seeded_rng(seed);
        let raw = sample_multinomial(&probs, shots, &mut rng);
        Ok(apply_readout_flips(&raw, &measured, &readout, &mut rng))
    }

    // ---------------------------------------------------------------
    // Trajectory backend
    // ---------------------------------------------------------------

    /// Stochastic Kraus unraveling: one pure-state trajectory per shot.
    /// Converges to the dense result as shots grow.
    pub fn run_trajectory(&self, shots: u64, seed: u64) -> Result<OutcomeCounts, SimError> {
        if shots == 0 {
            return Err(SimError::ZeroShots);
        }
        self.validate()?;
        let measured = self.measured_qubits();
        if measured.is_empty() {
            return Err(SimError::NothingMeasured);
        }
        let readout: Vec<(f64, f64)> = measured.iter().map(|&q| self.readout[q]).collect();

        let result = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = seeded_rng(mix_seed(seed, shot));
                self.run_single_trajectory(&mut rng, &measured, &readout)
            })
            .try_fold(
                || OutcomeCounts::new(measured.clone()),
                |mut acc, key| {
                    key.map(|k| {
                        acc.record(k);
                        acc
                    })
                },
            )
            .try_reduce(
                || OutcomeCounts::new(measured.clone()),
                |mut a, b| {
                    a.merge(&b);
                    Ok(a)
                },
            )?;
        Ok(result)
    }

    fn run_single_trajectory<R: rand::Rng>(
        &self,
        rng: &mut R,
        measured: &[usize],
        readout: &[(f64, f64)],
    ) -> Result<u64, SimError> {
        let mut state = QuantumState::zero(self.n_qubits);
        let mut outcomes: Vec<Option<u8>> = vec![None; self.n_qubits];
        for instr in &self.instructions {
            match instr {
                Instruction::Gate(g) => state.apply_gate(g)?,
                Instruction::Channel { channel, targets } => {
                    sample_channel_branch(&mut state, channel, targets, rng)?;
                }
                Instruction::Measure { qubit, basis } => {
                    if *basis == Basis::X {
                        state.apply_gate(&Gate::new(GateKind::H, vec![*qubit]).unwrap())?;
                    }
                    let p1 = state.prob_one(*qubit);
                    let outcome = u8::from(rng.random::<f64>() < p1);
                    state.collapse(*qubit, outcome)?;
                    outcomes[*qubit] = Some(outcome);
                }
                Instruction::Conditional {
                    control,
                    value,
                    gate,
                } => {
                    let recorded =
                        outcomes[*control].ok_or(SimError::ControlNotMeasured(*control))?;
                    if recorded == *value {
                        state.apply_gate(gate)?;
                    }
                }
            }
        }
        let mut key = 0u64;
        for (j, &q) in measured.iter().enumerate() {
            let mut bit = outcomes[q].expect("validated measurement missing");
            let (p01, p10) = readout[j];
            let flip_p = if bit == 0 { p01 } else { p10 };
            if flip_p > 0.0 && rng.random::<f64>() < flip_p {
                bit ^= 1;
            }
            key |= u64::from(bit) << j;
        }
        Ok(key)
    }
}

/// Sample one Kraus branch with probability ||K psi||^2 and renormalize.
/// Structured channels use state-independent branch probabilities where the
/// Kraus operators are scaled unitaries.
fn sample_channel_branch<R: rand::Rng>(
    state: &mut QuantumState,
    channel: &QuantumChannel,
    targets: &[usize],
    rng: &mut R,
) -> Result<(), SimError> {
    match *channel.kind() {
        ChannelKind::Depolarizing { p, n_qubits } => {
            if rng.random::<f64>() < p {
                // Uniform Pauli string (identity included) reproduces
                // (1-p) rho + p I/2^n exactly.
                let n_paulis = 1usize << (2 * n_qubits);
                let code = rng.random_range(0..n_paulis);
                apply_pauli_string(state, code, targets)?;
            }
            Ok(())
        }
        ChannelKind::BitFlip { p } => {
            if rng.random::<f64>() < p {
                state.apply_gate(&Gate::new(GateKind::X, vec![targets[0]]).unwrap())?;
            }
            Ok(())
        }
        ChannelKind::Dephasing { p } => {
            if rng.random::<f64>() < p {
                state.apply_gate(&Gate::new(GateKind::Z, vec![targets[0]]).unwrap())?;
            }
            Ok(())
        }
        _ => sample_generic_branch(state, channel, targets, rng),
    }
}

fn apply_pauli_string(
    state: &mut QuantumState,
    code: usize,
    targets: &[usize],
) -> Result<(), SimError> {
    use crate::cmat::CMat;
    use num_complex::Complex64;
    let n = targets.len();
    for (j, &t) in targets.iter().enumerate() {
        let idx = (code >> (2 * (n - 1 - j))) & 3;
        match idx {
            0 => {}
            1 => state.apply_gate(&Gate::new(GateKind::X, vec![t]).unwrap())?,
            2 => {
                let i = Complex64::i();
                let y = CMat::from_rows(
                    2,
                    &[
                        Complex64::new(0.0, 0.0),
                        -i,
                        i,
                        Complex64::new(0.0, 0.0),
                    ],
                );
                state.apply_matrix(&y, &[t]);
            }
            3 => state.apply_gate(&Gate::new(GateKind::Z, vec![t]).unwrap())?,
            _ => unreachable!(),
        }
    }
    Ok(())
}

fn sample_generic_branch<R: rand::Rng>(
    state: &mut QuantumState,
    channel: &QuantumChannel,
    targets: &[usize],
    rng: &mut R,
) -> Result<(), SimError> {
    let amps = state
        .amplitudes()
        .expect("trajectory backend runs on pure states")
        .to_vec();
    let mut branches: Vec<(Vec<num_complex::Complex64>, f64)> = Vec::new();
    let mut total = 0.0;
    for k in channel.kraus_ops() {
        let mut branch = amps.clone();
        crate::state::apply_to_vector(&mut branch, k, targets);
        let norm: f64 = branch.iter().map(|z| z.norm_sqr()).sum();
        total += norm;
        branches.push((branch, norm));
    }
    if total <= 0.0 {
        return Err(SimError::BranchUnderflow);
    }
    let mut u = rng.random::<f64>() * total;
    let mut chosen = None;
    for (i, (_, norm)) in branches.iter().enumerate() {
        if u < *norm {
            chosen = Some(i);
            break;
        }
        u -= norm;
    }
    // Rounding can push u past the end; fall back to the last viable branch.
    let idx = match chosen {
        Some(i) if branches[i].1 > 0.0 => i,
        _ => branches
            .iter()
            .rposition(|(_, n)| *n > 0.0)
            .ok_or(SimError::BranchUnderflow)?,
    };
    let (branch, norm) = &branches[idx];
    let scale = num_complex::Complex64::new(1.0 / norm.sqrt(), 0.0);
    let rescaled: Vec<_> = branch.iter().map(|z| z * scale).collect();
    *state = QuantumState::from_amplitudes_unchecked(rescaled, state.roles().to_vec());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::total_variation;

    #[test]
    fn noiseless_trajectory_matches_dense_distribution() {
        let mut c = Circuit::new(3);
        c.h(0).cnot(0, 1).cnot(1, 2);
        c.measure(0, Basis::Z).measure(1, Basis::Z).measure(2, Basis::Z);
        let (_, probs) = c.measured_distribution().unwrap();
        let counts = c.run_trajectory(100_000, 17).unwrap();
        // 4 sigma per outcome
        for (key, &p) in probs.iter().enumerate() {
            let f = counts.fraction_where(|k| k == key as u64);
            let sigma = (p * (1.0 - p) / 100_000.0).sqrt();
            assert!(
                (f - p).abs() <= 4.0 * sigma + 5e-5,
                "outcome {key}: {f} vs {p}"
            );
        }
    }

    #[test]
    fn depolarizing_p1_trajectory_is_uniform() {
        let mut c = Circuit::new(1);
        c.channel(QuantumChannel::depolarizing(1.0, 1).unwrap(), vec![0]);
        c.measure(0, Basis::Z);
        let counts = c.run_trajectory(100_000, 23).unwrap();
        let p1 = counts.fraction_where(|k| k == 1);
        let sigma = (0.25f64 / 100_000.0).sqrt();
        assert!((p1 - 0.5).abs() < 3.0 * sigma, "p1 = {p1}");
    }

    #[test]
    fn trajectory_thermal_matches_dense() {
        let mut c = Circuit::new(2);
        c.h(0).cnot(0, 1);
        c.channel(
            QuantumChannel::thermal_relaxation(5e-5, 1e-4, 8e-5).unwrap(),
            vec![0],
        );
        c.channel(
            QuantumChannel::thermal_relaxation(5e-5, 1e-4, 8e-5).unwrap(),
            vec![1],
        );
        c.measure(0, Basis::Z).measure(1, Basis::Z);
        let (_, probs) = c.measured_distribution().unwrap();
        let counts = c.run_trajectory(200_000, 31).unwrap();
        let tv = total_variation(&counts, &probs);
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn deterministic_counts_for_fixed_seed() {
        let mut c = Circuit::new(2);
        c.h(0).cnot(0, 1);
        c.channel(QuantumChannel::depolarizing(0.1, 2).unwrap(), vec![0, 1]);
        c.measure(0, Basis::Z).measure(1, Basis::Z);
        let a = c.run_trajectory(20_000, 5).unwrap();
        let b = c.run_trajectory(20_000, 5).unwrap();
        assert_eq!(a, b);
        let d1 = c.run_dense(20_000, 5).unwrap();
        let d2 = c.run_dense(20_000, 5).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn conditional_z_corrects_minus_outcome() {
        // Bell-style storage: measure q0 in X; on |-, apply Z to q1.
        // With the correction, q1 ends in |+> regardless of the outcome.
        let mut c = Circuit::new(2);
        c.h(0).cnot(0, 1);
        c.measure(0, Basis::X);
        c.conditional(0, 1, Gate::new(GateKind::Z, vec![1]).unwrap());
        c.measure(1, Basis::X);
        let (measured, probs) = c.measured_distribution().unwrap();
        assert_eq!(measured, vec![0, 1]);
        // q1 = + (bit 0) always: outcomes 0b00 and 0b01 each 1/2.
        assert!((probs[0b00] - 0.5).abs() < 1e-12);
        assert!((probs[0b01] - 0.5).abs() < 1e-12);
        assert!(probs[0b10].abs() < 1e-12);
        assert!(probs[0b11].abs() < 1e-12);
    }

    #[test]
    fn conditional_without_measurement_rejected() {
        let mut c = Circuit::new(2);
        c.conditional(0, 1, Gate::new(GateKind::Z, vec![1]).unwrap());
        assert!(matches!(
            c.validate(),
            Err(SimError::ControlNotMeasured(0))
        ));
    }

    #[test]
    fn gate_after_measurement_rejected() {
        let mut c = Circuit::new(1);
        c.measure(0, Basis::Z);
        c.h(0);
        assert!(matches!(
            c.validate(),
            Err(SimError::OperationAfterMeasurement(0))
        ));
    }

    #[test]
    fn trajectory_matches_dense_with_conditionals() {
        let mut c = Circuit::new(2);
        c.h(0).phase(0, 1.1).cnot(0, 1);
        c.measure(0, Basis::X);
        c.conditional(0, 1, Gate::new(GateKind::Z, vec![1]).unwrap());
        c.measure(1, Basis::X);
        let (_, probs) = c.measured_distribution().unwrap();
        let counts = c.run_trajectory(100_000, 77).unwrap();
        let tv = total_variation(&counts, &probs);
        assert!(tv < 0.01, "tv = {tv}");
    }
}
