//! Born-rule sampling with classical readout errors.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::counts::OutcomeCounts;
use crate::error::SimError;
use crate::gate::{Gate, GateKind};
use crate::state::QuantumState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Z,
    /// Realized as an H rotation followed by Z readout; outcome 1 means the
    /// qubit was found in |->.
    X,
}

/// Standalone measurement request on a prepared state.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSpec {
    pub qubits: Vec<usize>,
    pub basis: Vec<Basis>,
    /// Per-qubit (p_{0->1}, p_{1->0}) classical flip probabilities.
    pub readout_error: Vec<(f64, f64)>,
    pub shots: u64,
}

impl MeasurementSpec {
    pub fn z_basis(qubits: Vec<usize>, shots: u64) -> Self {
        let n = qubits.len();
        Self {
            qubits,
            basis: vec![Basis::Z; n],
            readout_error: vec![(0.0, 0.0); n],
            shots,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.shots == 0 {
            return Err(SimError::ZeroShots);
        }
        assert_eq!(self.qubits.len(), self.basis.len());
        assert_eq!(self.qubits.len(), self.readout_error.len());
        for &(p01, p10) in &self.readout_error {
            if !(0.0..=1.0).contains(&p01) {
                return Err(SimError::BadProbability(p01));
            }
            if !(0.0..=1.0).contains(&p10) {
                return Err(SimError::BadProbability(p10));
            }
        }
        Ok(())
    }
}

/// Sample bitstrings from the Born distribution of `spec.qubits`, then flip
/// each recorded bit independently per the readout error rates.
/// Deterministic for a fixed seed.
pub fn measure(
    state: &QuantumState,
    spec: &MeasurementSpec,
    seed: u64,
) -> Result<OutcomeCounts, SimError> {
    spec.validate()?;
    for &q in &spec.qubits {
        if q >= state.n_qubits() {
            return Err(SimError::QubitOutOfRange {
                qubit: q,
                n_qubits: state.n_qubits(),
            });
        }
    }
    let mut work = state.clone();
    for (&q, &b) in spec.qubits.iter().zip(spec.basis.iter()) {
        if b == Basis::X {
            work.apply_gate(&Gate::new(GateKind::H, vec![q]).unwrap())?;
        }
    }
    // Order ascending by qubit index; key bit j belongs to sorted[j].
    let mut order: Vec<usize> = (0..spec.qubits.len()).collect();
    order.sort_by_key(|&i| spec.qubits[i]);
    let sorted_qubits: Vec<usize> = order.iter().map(|&i| spec.qubits[i]).collect();
    let sorted_readout: Vec<(f64, f64)> = order.iter().map(|&i| spec.readout_error[i]).collect();

    let probs = work.marginal(&sorted_qubits);
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(SimError::BadProbabilitySum(total));
    }
    let mut rng = crate::stats::seeded_rng(seed);
    let raw = sample_multinomial(&probs, spec.shots, &mut rng);
    Ok(apply_readout_flips(
        &raw,
        &sorted_qubits,
        &sorted_readout,
        &mut rng,
    ))
}

/// Draw `shots` samples from `probs` via conditional binomials.
pub fn sample_multinomial<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut rem_p: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || rem_p <= p {
            out[i] = remaining;
            break;
        }
        let ratio = (p / rem_p).clamp(0.0, 1.0);
        let draw = if ratio <= 0.0 {
            0
        } else if ratio >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, ratio).unwrap().sample(rng)
        };
        out[i] = draw;
        remaining -= draw;
        rem_p -= p;
    }
    out
}

/// Flip every sampled bit independently with its (p01, p10) rates.
/// Realized as a per-qubit binomial split of each outcome's count, which
/// draws the same distribution as flipping shot by shot at a fraction of
/// the RNG cost.
pub fn apply_readout_flips<R: Rng>(
    raw: &[u64],
    qubits: &[usize],
    readout: &[(f64, f64)],
    rng: &mut R,
) -> OutcomeCounts {
    let mut work = raw.to_vec();
    let mut next = vec![0u64; raw.len()];
    for (j, &(p01, p10)) in readout.iter().enumerate() {
        if p01 == 0.0 && p10 == 0.0 {
            continue;
        }
        next.fill(0);
        let bit = 1usize << j;
        for (key, &n) in work.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let flip_p = if key & bit == 0 { p01 } else { p10 };
            let flipped = if flip_p <= 0.0 {
                0
            } else if flip_p >= 1.0 {
                n
            } else {
                Binomial::new(n, flip_p).unwrap().sample(rng)
            };
            next[key] += n - flipped;
            next[key ^ bit] += flipped;
        }
        work.copy_from_slice(&next);
    }
    let mut counts = OutcomeCounts::new(qubits.to_vec());
    for (key, &n) in work.iter().enumerate() {
        counts.record_many(key as u64, n);
    }
    counts
}
