//! Kraus-operator noise channels.
//!
//! All channels are trace preserving and carry an explicit Kraus
//! decomposition so the trajectory backend can sample branches. The dense
//! backend recognizes the structured kinds and applies them with cheaper
//! closed-form updates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmat::{CMat, C_ONE, C_ZERO};
use crate::error::SimError;

/// Structured channel kinds the dense backend can fast-path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChannelKind {
    /// rho -> (1-p) rho + p I/2^n on the target qubits.
    Depolarizing { p: f64, n_qubits: usize },
    /// Energy relaxation and dephasing over duration `t` with constants
    /// `t1`, `t2`: populations decay as e^{-t/T1}, coherences as e^{-t/2T2}.
    ThermalRelaxation { t: f64, t1: f64, t2: f64 },
    /// rho -> (1-p) rho + p Z rho Z.
    Dephasing { p: f64 },
    /// rho -> (1-p) rho + p X rho X. Used for state-preparation errors.
    BitFlip { p: f64 },
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    kind: ChannelKind,
    kraus: Vec<CMat>,
    arity: usize,
}

const TP_TOL: f64 = 1e-10;

fn pauli(idx: usize) -> CMat {
    let i = Complex64::i();
    match idx {
        0 => CMat::identity(2),
        1 => CMat::from_rows(2, &[C_ZERO, C_ONE, C_ONE, C_ZERO]),
        2 => CMat::from_rows(2, &[C_ZERO, -i, i, C_ZERO]),
        3 => CMat::diagonal(&[C_ONE, -C_ONE]),
        _ => unreachable!(),
    }
}

/// n-qubit Pauli string P_{i_0} ⊗ ... ⊗ P_{i_{n-1}} for `code` in base 4.
fn pauli_string(n: usize, code: usize) -> CMat {
    let mut m = pauli((code >> (2 * (n - 1))) & 3);
    for q in (0..n - 1).rev() {
        m = m.kron(&pauli((code >> (2 * q)) & 3));
    }
    m
}

impl QuantumChannel {
    /// Uniform depolarizing channel on `n_qubits` qubits.
    pub fn depolarizing(p: f64, n_qubits: usize) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SimError::BadProbability(p));
        }
        let dim = 1usize << n_qubits;
        let n_paulis = dim * dim; // 4^n
        let mut kraus = Vec::with_capacity(n_paulis);
        let w_id = (1.0 - p + p / n_paulis as f64).sqrt();
        let w_other = (p / n_paulis as f64).sqrt();
        kraus.push(CMat::identity(dim).scale(Complex64::new(w_id, 0.0)));
        for code in 1..n_paulis {
            kraus.push(pauli_string(n_qubits, code).scale(Complex64::new(w_other, 0.0)));
        }
        Ok(Self {
            kind: ChannelKind::Depolarizing { p, n_qubits },
            kraus,
            arity: n_qubits,
        })
    }

    /// Thermal relaxation over duration `t`.
    ///
    /// Populations relax toward the ground state with rate 1/T1 and
    /// coherences decay by e^{-t/2T2}. Complete positivity requires the
    /// coherence decay to be at least as fast as the amplitude-damping
    /// contribution e^{-t/2T1}; when T2 > T1 the pure-dephasing rate is
    /// clamped at zero, capping the effective coherence time at T1.
    pub fn thermal_relaxation(t: f64, t1: f64, t2: f64) -> Result<Self, SimError> {
        if t < 0.0 || t1 <= 0.0 || t2 <= 0.0 {
            return Err(SimError::BadRelaxationParams { t, t1, t2 });
        }
        // gamma: amplitude-damping probability; lambda: extra pure dephasing.
        let gamma = 1.0 - (-t / t1).exp();
        let target_coh = (-t / (2.0 * t2)).exp();
        let ad_coh = (-t / (2.0 * t1)).exp();
        let lambda = if target_coh >= ad_coh {
            0.0
        } else {
            1.0 - (target_coh / ad_coh).powi(2)
        };
        let k_keep = CMat::diagonal(&[
            C_ONE,
            Complex64::new(((1.0 - gamma) * (1.0 - lambda)).sqrt(), 0.0),
        ]);
        let k_dephase = CMat::diagonal(&[
            C_ZERO,
            Complex64::new(((1.0 - gamma) * lambda).sqrt(), 0.0),
        ]);
        let mut k_decay = CMat::zeros(2);
        k_decay.set(0, 1, Complex64::new(gamma.sqrt(), 0.0));
        let kraus = vec![k_keep, k_dephase, k_decay];
        Ok(Self {
            kind: ChannelKind::ThermalRelaxation { t, t1, t2 },
            kraus,
            arity: 1,
        })
    }

    pub fn dephasing(p: f64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SimError::BadProbability(p));
        }
        let kraus = vec![
            CMat::identity(2).scale(Complex64::new((1.0 - p).sqrt(), 0.0)),
            pauli(3).scale(Complex64::new(p.sqrt(), 0.0)),
        ];
        Ok(Self {
            kind: ChannelKind::Dephasing { p },
            kraus,
            arity: 1,
        })
    }

    pub fn bit_flip(p: f64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SimError::BadProbability(p));
        }
        let kraus = vec![
            CMat::identity(2).scale(Complex64::new((1.0 - p).sqrt(), 0.0)),
            pauli(1).scale(Complex64::new(p.sqrt(), 0.0)),
        ];
        Ok(Self {
            kind: ChannelKind::BitFlip { p },
            kraus,
            arity: 1,
        })
    }

    /// Channel from a caller-supplied Kraus set; validated trace preserving.
    pub fn from_kraus(kraus: Vec<CMat>) -> Result<Self, SimError> {
        assert!(!kraus.is_empty(), "empty Kraus set");
        let dim = kraus[0].dim();
        assert!(dim.is_power_of_two() && dim >= 2, "Kraus dim must be 2^k");
        let arity = dim.trailing_zeros() as usize;
        let mut sum = CMat::zeros(dim);
        for k in &kraus {
            assert_eq!(k.dim(), dim, "mixed Kraus dimensions");
            let kk = k.dagger().matmul(k);
            for r in 0..dim {
                for c in 0..dim {
                    let v = sum.get(r, c) + kk.get(r, c);
                    sum.set(r, c, v);
                }
            }
        }
        let defect = sum.max_abs_diff(&CMat::identity(dim));
        if defect > TP_TOL {
            return Err(SimError::NotTracePreserving(defect));
        }
        Ok(Self {
            kind: ChannelKind::Custom,
            kraus,
            arity,
        })
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    pub fn kraus_ops(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// max_ij |(sum_k K†K - I)_ij|
    pub fn trace_preservation_defect(&self) -> f64 {
        let dim = self.kraus[0].dim();
        let mut sum = CMat::zeros(dim);
        for k in &self.kraus {
            let kk = k.dagger().matmul(k);
            for r in 0..dim {
                for c in 0..dim {
                    let v = sum.get(r, c) + kk.get(r, c);
                    sum.set(r, c, v);
                }
            }
        }
        sum.max_abs_diff(&CMat::identity(dim))
    }

    /// True when every Kraus operator is proportional to identity.
    pub fn is_identity(&self) -> bool {
        match self.kind {
            ChannelKind::Depolarizing { p, .. }
            | ChannelKind::Dephasing { p }
            | ChannelKind::BitFlip { p } => p == 0.0,
            ChannelKind::ThermalRelaxation { t, t1, t2 } => {
                t == 0.0 || (t / t1 == 0.0 && t / t2 == 0.0)
            }
            ChannelKind::Custom => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructed_channels_are_trace_preserving() {
        let channels = vec![
            QuantumChannel::depolarizing(0.3, 1).unwrap(),
            QuantumChannel::depolarizing(0.97, 2).unwrap(),
            QuantumChannel::thermal_relaxation(1e-6, 1e-4, 5e-5).unwrap(),
            QuantumChannel::thermal_relaxation(2.0, 1.0, 1.0).unwrap(),
            QuantumChannel::dephasing(0.5).unwrap(),
            QuantumChannel::bit_flip(0.01).unwrap(),
        ];
        for ch in channels {
            assert!(
                ch.trace_preservation_defect() < TP_TOL,
                "{:?} defect {}",
                ch.kind(),
                ch.trace_preservation_defect()
            );
        }
    }

    #[test]
    fn thermal_clamps_when_t2_exceeds_t1() {
        // T2 > T1 would make the map non-CP; the clamp keeps it physical.
        let ch = QuantumChannel::thermal_relaxation(1e-5, 1e-4, 1.9e-4).unwrap();
        assert!(ch.trace_preservation_defect() < TP_TOL);
    }

    #[test]
    fn bad_probability_rejected() {
        assert!(QuantumChannel::depolarizing(1.2, 1).is_err());
        assert!(QuantumChannel::dephasing(-0.1).is_err());
    }

    #[test]
    fn custom_kraus_validated() {
        // Non trace-preserving set must be rejected.
        let bad = vec![CMat::identity(2).scale(Complex64::new(0.9, 0.0))];
        assert!(QuantumChannel::from_kraus(bad).is_err());
        let good = vec![CMat::identity(2)];
        assert!(QuantumChannel::from_kraus(good).is_ok());
    }

    #[test]
    fn infinite_coherence_times_yield_identity() {
        let ch =
            QuantumChannel::thermal_relaxation(1e-6, f64::INFINITY, f64::INFINITY).unwrap();
        assert!(ch.is_identity());
    }
}
