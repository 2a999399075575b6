//! Gate vocabulary of the sensing circuits.
//!
//! Every gate kind maps to an explicit unitary matrix; the simulation backends
//! apply those matrices with bitwise indexing rather than building full
//! `2^n x 2^n` operators.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmat::{CMat, C_ONE, C_ZERO};
use crate::error::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Z,
    /// Phase gate diag(1, e^{i phi}).
    P(f64),
    /// Rotation about the x axis by the given angle.
    Rx(f64),
    Cnot,
    /// Controlled swap; targets are (control, a, b).
    Cswap,
    /// Wait gate on a memory qubit: diag(1, e^{i tau}). Decoherence during
    /// the wait is modeled separately by the noise attachment policy.
    Delay(f64),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::H
            | GateKind::X
            | GateKind::Z
            | GateKind::P(_)
            | GateKind::Rx(_)
            | GateKind::Delay(_) => 1,
            GateKind::Cnot => 2,
            GateKind::Cswap => 3,
        }
    }

    /// The gate's unitary on its own qubits (dimension `2^arity`).
    pub fn unitary(&self) -> CMat {
        let i = Complex64::i();
        match *self {
            GateKind::H => {
                let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
                CMat::from_rows(2, &[s, s, s, -s])
            }
            GateKind::X => CMat::from_rows(2, &[C_ZERO, C_ONE, C_ONE, C_ZERO]),
            GateKind::Z => CMat::diagonal(&[C_ONE, -C_ONE]),
            GateKind::P(phi) => CMat::diagonal(&[C_ONE, (i * phi).exp()]),
            GateKind::Delay(tau) => CMat::diagonal(&[C_ONE, (i * tau).exp()]),
            GateKind::Rx(phi) => {
                let c = Complex64::new((phi / 2.0).cos(), 0.0);
                let s = -i * (phi / 2.0).sin();
                CMat::from_rows(2, &[c, s, s, c])
            }
            GateKind::Cnot => {
                let mut m = CMat::identity(4);
                // |10> <-> |11> in (control, target) ordering
                m.set(2, 2, C_ZERO);
                m.set(3, 3, C_ZERO);
                m.set(2, 3, C_ONE);
                m.set(3, 2, C_ONE);
                m
            }
            GateKind::Cswap => {
                let mut m = CMat::identity(8);
                // swap the two targets when the control bit is 1:
                // |101> <-> |110> in (control, a, b) ordering
                m.set(5, 5, C_ZERO);
                m.set(6, 6, C_ZERO);
                m.set(5, 6, C_ONE);
                m.set(6, 5, C_ONE);
                m
            }
        }
    }
}

/// A gate instance bound to concrete qubit indices.
///
/// For `Cnot` the targets are `(control, target)`; for `Cswap` they are
/// `(control, a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self, SimError> {
        if targets.len() != kind.arity() {
            return Err(SimError::ArityMismatch {
                expected: kind.arity(),
                got: targets.len(),
            });
        }
        let mut sorted = targets.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != targets.len() {
            return Err(SimError::DuplicateTarget);
        }
        Ok(Self { kind, targets })
    }

    pub fn validate_for(&self, n_qubits: usize) -> Result<(), SimError> {
        for &t in &self.targets {
            if t >= n_qubits {
                return Err(SimError::QubitOutOfRange {
                    qubit: t,
                    n_qubits,
                });
            }
        }
        Ok(())
    }
}
