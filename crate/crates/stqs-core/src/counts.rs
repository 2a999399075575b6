//! Measurement outcome histograms and post-selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Histogram of measured bitstrings.
///
/// Keys pack the outcomes of the measured qubits: bit `j` of a key holds the
/// outcome of `measured[j]` (measured qubits listed in ascending index
/// order). `total_shots` counts everything sampled; `kept_shots` what
/// survived post-selection. A `BTreeMap` keeps iteration deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub counts: BTreeMap<u64, u64>,
    pub measured: Vec<usize>,
    pub total_shots: u64,
    pub kept_shots: u64,
}

impl OutcomeCounts {
    pub fn new(measured: Vec<usize>) -> Self {
        Self {
            counts: BTreeMap::new(),
            measured,
            total_shots: 0,
            kept_shots: 0,
        }
    }

    pub fn record(&mut self, key: u64) {
        *self.counts.entry(key).or_insert(0) += 1;
        self.total_shots += 1;
        self.kept_shots += 1;
    }

    pub fn record_many(&mut self, key: u64, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(key).or_insert(0) += n;
        self.total_shots += n;
        self.kept_shots += n;
    }

    /// Merge another histogram over the same measured set.
    pub fn merge(&mut self, other: &OutcomeCounts) {
        assert_eq!(self.measured, other.measured);
        for (&k, &v) in &other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.total_shots += other.total_shots;
        self.kept_shots += other.kept_shots;
    }

    /// Value of `qubit` within a packed outcome key.
    pub fn bit_of(&self, key: u64, qubit: usize) -> u8 {
        let pos = self
            .measured
            .iter()
            .position(|&q| q == qubit)
            .expect("qubit not measured");
        ((key >> pos) & 1) as u8
    }

    pub fn is_measured(&self, qubit: usize) -> bool {
        self.measured.contains(&qubit)
    }

    /// Render a key as a bitstring with the lowest-index qubit leftmost.
    pub fn bitstring(&self, key: u64) -> String {
        (0..self.measured.len())
            .map(|j| if (key >> j) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// Relative frequency of outcomes where `predicate` holds, over kept shots.
    pub fn fraction_where<F: Fn(u64) -> bool>(&self, predicate: F) -> f64 {
        if self.kept_shots == 0 {
            return 0.0;
        }
        let hits: u64 = self
            .counts
            .iter()
            .filter(|(&k, _)| predicate(k))
            .map(|(_, &v)| v)
            .sum();
        hits as f64 / self.kept_shots as f64
    }

    pub fn kept_fraction(&self) -> f64 {
        if self.total_shots == 0 {
            0.0
        } else {
            self.kept_shots as f64 / self.total_shots as f64
        }
    }

    /// Keep only outcomes where each `(qubit, value)` pattern entry matches.
    /// Total shots are preserved so the kept fraction stays meaningful.
    pub fn postselect(&self, pattern: &[(usize, u8)]) -> Result<OutcomeCounts, SimError> {
        for &(q, _) in pattern {
            if !self.is_measured(q) {
                return Err(SimError::PatternQubitUnmeasured(q));
            }
        }
        if pattern.is_empty() {
            return Ok(self.clone());
        }
        let mut out = OutcomeCounts::new(self.measured.clone());
        out.total_shots = self.total_shots;
        for (&key, &cnt) in &self.counts {
            let keep = pattern.iter().all(|&(q, v)| self.bit_of(key, q) == v);
            if keep {
                out.counts.insert(key, cnt);
                out.kept_shots += cnt;
            }
        }
        if out.kept_shots == 0 {
            return Err(SimError::EmptySelection);
        }
        Ok(out)
    }

    /// Empirical distribution over the 2^m outcome space.
    pub fn frequencies(&self) -> Vec<f64> {
        let dim = 1usize << self.measured.len();
        let mut out = vec![0.0; dim];
        if self.kept_shots == 0 {
            return out;
        }
        for (&k, &v) in &self.counts {
            out[k as usize] = v as f64 / self.kept_shots as f64;
        }
        out
    }
}

/// Total variation distance between an empirical histogram and a reference
/// distribution over the same outcome space.
pub fn total_variation(counts: &OutcomeCounts, reference: &[f64]) -> f64 {
    let freq = counts.frequencies();
    assert_eq!(freq.len(), reference.len());
    0.5 * freq
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_counts() -> OutcomeCounts {
        // Two qubits measured; bitstring q0 leftmost.
        let mut c = OutcomeCounts::new(vec![0, 1]);
        c.record_many(0b00, 500);
        c.record_many(0b10, 300); // q0=0, q1=1
        c.record_many(0b01, 150); // q0=1, q1=0
        c.record_many(0b11, 50);
        c
    }

    #[test]
    fn postselect_on_second_qubit_ground() {
        let c = sample_counts();
        let kept = c.postselect(&[(1, 0)]).unwrap();
        assert_eq!(kept.kept_shots, 650);
        assert_eq!(kept.total_shots, 1000);
        assert_eq!(kept.counts.get(&0b00), Some(&500));
        assert_eq!(kept.counts.get(&0b01), Some(&150));
        assert!(kept.counts.get(&0b10).is_none());
    }

    #[test]
    fn empty_pattern_is_identity() {
        let c = sample_counts();
        let kept = c.postselect(&[]).unwrap();
        assert_eq!(kept, c);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let mut c = OutcomeCounts::new(vec![0]);
        c.record_many(0b1, 10);
        assert!(matches!(
            c.postselect(&[(0, 0)]),
            Err(SimError::EmptySelection)
        ));
    }

    #[test]
    fn pattern_on_unmeasured_qubit_rejected() {
        let c = sample_counts();
        assert!(matches!(
            c.postselect(&[(5, 0)]),
            Err(SimError::PatternQubitUnmeasured(5))
        ));
    }

    #[test]
    fn bitstring_prints_qubit0_leftmost() {
        let c = sample_counts();
        assert_eq!(c.bitstring(0b01), "10"); // q0=1, q1=0
        assert_eq!(c.bitstring(0b10), "01");
    }

    #[test]
    fn kept_plus_discarded_equals_total() {
        let c = sample_counts();
        let kept = c.postselect(&[(1, 0)]).unwrap();
        let discarded = c.kept_shots - kept.kept_shots;
        assert_eq!(kept.kept_shots + discarded, c.total_shots);
    }
}
