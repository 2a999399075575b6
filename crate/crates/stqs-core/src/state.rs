//! Dense quantum state backends.
//!
//! Two representations share one type: a pure amplitude vector of length
//! `2^n`, and a row-major density matrix of shape `2^n x 2^n`. Gates and
//! channels are applied with bitwise indexing over the target qubits; the
//! density backend recognizes structured channels and applies them with
//! closed-form subblock updates instead of generic Kraus sums.
//!
//! Conventions: qubit `q` occupies bit `q` of a basis index, and bitstrings
//! print qubit 0 leftmost.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmat::{CMat, C_ONE, C_ZERO};
use crate::channel::{ChannelKind, QuantumChannel};
use crate::error::SimError;
use crate::gate::Gate;
use crate::linalg::hermitian_eigenvalues;

/// Per-qubit role label. Sensing qubits accrue the signal, the memory qubit
/// stores the aggregated phase, computing qubits run post-processing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sensing,
    Memory,
    Computing,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Pure(Vec<Complex64>),
    Density(Vec<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n: usize,
    repr: Repr,
    roles: Vec<Role>,
}

const NORM_TOL: f64 = 1e-10;

/// Embed the `sub` block index into `base` at the target bit positions.
/// `sub`'s most significant bit corresponds to `targets[0]`, matching the
/// basis ordering of gate matrices.
#[inline]
pub(crate) fn block_index(base: usize, targets: &[usize], sub: usize) -> usize {
    let k = targets.len();
    let mut idx = base;
    for (j, &t) in targets.iter().enumerate() {
        idx |= ((sub >> (k - 1 - j)) & 1) << t;
    }
    idx
}

#[inline]
fn target_mask(targets: &[usize]) -> usize {
    targets.iter().fold(0usize, |m, &t| m | (1usize << t))
}

impl QuantumState {
    /// All qubits in |0>, pure representation.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![C_ZERO; 1 << n];
        amps[0] = C_ONE;
        Self {
            n,
            repr: Repr::Pure(amps),
            roles: vec![Role::Sensing; n],
        }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amps.len();
        assert!(len.is_power_of_two() && len >= 2, "length must be 2^n");
        let n = len.trailing_zeros() as usize;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized((norm - 1.0).abs()));
        }
        Ok(Self {
            n,
            repr: Repr::Pure(amps),
            roles: vec![Role::Sensing; n],
        })
    }

    /// Pure state from amplitudes that are normalized by construction
    /// (trajectory branch renormalization).
    pub(crate) fn from_amplitudes_unchecked(amps: Vec<Complex64>, roles: Vec<Role>) -> Self {
        let n = amps.len().trailing_zeros() as usize;
        Self {
            n,
            repr: Repr::Pure(amps),
            roles,
        }
    }

    /// Build from a row-major density matrix; checks trace and hermiticity.
    pub fn from_density(mat: Vec<Complex64>, n: usize) -> Result<Self, SimError> {
        let dim = 1usize << n;
        assert_eq!(mat.len(), dim * dim, "matrix must be 2^n x 2^n");
        let state = Self {
            n,
            repr: Repr::Density(mat),
            roles: vec![Role::Sensing; n],
        };
        state.check_density_basics()?;
        Ok(state)
    }

    pub fn with_roles(mut self, roles: Vec<Role>) -> Self {
        assert_eq!(roles.len(), self.n);
        self.roles = roles;
        self
    }

    pub fn set_roles(&mut self, roles: Vec<Role>) {
        assert_eq!(roles.len(), self.n);
        self.roles = roles;
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn is_pure_repr(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        match &self.repr {
            Repr::Pure(a) => Some(a),
            Repr::Density(_) => None,
        }
    }

    /// Row-major density matrix, promoting a pure state on demand.
    pub fn density_matrix(&self) -> Vec<Complex64> {
        match &self.repr {
            Repr::Density(m) => m.clone(),
            Repr::Pure(a) => {
                let dim = a.len();
                let mut m = vec![C_ZERO; dim * dim];
                for r in 0..dim {
                    if a[r] == C_ZERO {
                        continue;
                    }
                    for c in 0..dim {
                        m[r * dim + c] = a[r] * a[c].conj();
                    }
                }
                m
            }
        }
    }

    /// Convert in place to the density representation.
    pub fn promote_to_density(&mut self) {
        if let Repr::Pure(_) = self.repr {
            let m = self.density_matrix();
            self.repr = Repr::Density(m);
        }
    }

    /// Tensor product `self ⊗ other`; `other`'s qubits get the higher indices.
    pub fn tensor(&self, other: &QuantumState) -> QuantumState {
        let n = self.n + other.n;
        let mut roles = self.roles.clone();
        roles.extend_from_slice(&other.roles);
        match (&self.repr, &other.repr) {
            (Repr::Pure(a), Repr::Pure(b)) => {
                let mut amps = vec![C_ZERO; 1 << n];
                for (j, &bj) in b.iter().enumerate() {
                    if bj == C_ZERO {
                        continue;
                    }
                    for (i, &ai) in a.iter().enumerate() {
                        amps[(j << self.n) | i] = ai * bj;
                    }
                }
                QuantumState {
                    n,
                    repr: Repr::Pure(amps),
                    roles,
                }
            }
            _ => {
                let da = self.density_matrix();
                let db = other.density_matrix();
                let dim_a = 1 << self.n;
                let dim_b = 1 << other.n;
                let dim = dim_a * dim_b;
                let mut m = vec![C_ZERO; dim * dim];
                for rb in 0..dim_b {
                    for cb in 0..dim_b {
                        let vb = db[rb * dim_b + cb];
                        if vb == C_ZERO {
                            continue;
                        }
                        for ra in 0..dim_a {
                            for ca in 0..dim_a {
                                let va = da[ra * dim_a + ca];
                                if va == C_ZERO {
                                    continue;
                                }
                                let r = (rb << self.n) | ra;
                                let c = (cb << self.n) | ca;
                                m[r * dim + c] = va * vb;
                            }
                        }
                    }
                }
                QuantumState {
                    n,
                    repr: Repr::Density(m),
                    roles,
                }
            }
        }
    }

    // ------------------------------------------------------------------
    // Gate application
    // ------------------------------------------------------------------

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.validate_for(self.n)?;
        let u = gate.kind.unitary();
        self.apply_matrix(&u, &gate.targets);
        Ok(())
    }

    /// Apply a small matrix to the target qubits: U|psi> or U rho U†.
    pub(crate) fn apply_matrix(&mut self, u: &CMat, targets: &[usize]) {
        match &mut self.repr {
            Repr::Pure(amps) => apply_to_vector(amps, u, targets),
            Repr::Density(mat) => {
                let dim = 1usize << self.n;
                apply_left(mat, dim, u, targets);
                apply_right(mat, dim, &u.conjugate(), targets);
            }
        }
    }

    /// Apply `gate` on the subspace where `control` has value `value`.
    /// Used for deferred classically controlled corrections.
    pub(crate) fn apply_controlled(&mut self, control: usize, value: u8, gate: &Gate) {
        let u = gate.kind.unitary();
        let k = gate.targets.len();
        let dim_small = 1 << (k + 1);
        // Build the controlled unitary with `control` as the leading target.
        let mut cu = CMat::identity(dim_small);
        let active = if value == 1 { 1 } else { 0 };
        for a in 0..(1 << k) {
            for b in 0..(1 << k) {
                let r = (active << k) | a;
                let c = (active << k) | b;
                cu.set(r, c, u.get(a, b));
            }
        }
        let mut targets = vec![control];
        targets.extend_from_slice(&gate.targets);
        self.apply_matrix(&cu, &targets);
    }

    // ------------------------------------------------------------------
    // Channel application (density representation)
    // ------------------------------------------------------------------

    /// rho -> sum_K K rho K†. A pure state is promoted to a density matrix.
    pub fn apply_channel(
        &mut self,
        channel: &QuantumChannel,
        targets: &[usize],
    ) -> Result<(), SimError> {
        if channel.arity() != targets.len() {
            return Err(SimError::ChannelArityMismatch {
                arity: channel.arity(),
                targets: targets.len(),
            });
        }
        for &t in targets {
            if t >= self.n {
                return Err(SimError::QubitOutOfRange {
                    qubit: t,
                    n_qubits: self.n,
                });
            }
        }
        if channel.is_identity() {
            return Ok(());
        }
        self.promote_to_density();
        let dim = 1usize << self.n;
        let Repr::Density(mat) = &mut self.repr else {
            unreachable!()
        };
        match *channel.kind() {
            ChannelKind::Depolarizing { p, .. } => depolarize_dense(mat, dim, targets, p),
            ChannelKind::ThermalRelaxation { t, t1, t2 } => {
                let e1 = (-t / t1).exp();
                // Clamped coherence factor, consistent with the Kraus set.
                let f = (-t / (2.0 * t2)).exp().min((-t / (2.0 * t1)).exp());
                thermal_dense(mat, dim, targets[0], e1, f);
            }
            ChannelKind::Dephasing { p } => dephase_factor_dense(mat, dim, targets[0], 1.0 - 2.0 * p),
            ChannelKind::BitFlip { p } => bitflip_dense(mat, dim, targets[0], p),
            ChannelKind::Custom => kraus_dense(mat, dim, channel, targets),
        }
        Ok(())
    }

    /// Generic Kraus-sum application, ignoring the structured fast paths.
    /// Kept public for cross-checking the fast paths in tests.
    pub fn apply_channel_generic(
        &mut self,
        channel: &QuantumChannel,
        targets: &[usize],
    ) -> Result<(), SimError> {
        if channel.arity() != targets.len() {
            return Err(SimError::ChannelArityMismatch {
                arity: channel.arity(),
                targets: targets.len(),
            });
        }
        self.promote_to_density();
        let dim = 1usize << self.n;
        let Repr::Density(mat) = &mut self.repr else {
            unreachable!()
        };
        kraus_dense(mat, dim, channel, targets);
        Ok(())
    }

    // ------------------------------------------------------------------
    // Probabilities, collapse, reduction
    // ------------------------------------------------------------------

    /// Probability that `qubit` reads 1 in the computational basis.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        match &self.repr {
            Repr::Pure(a) => a
                .iter()
                .enumerate()
                .filter(|(i, _)| i & bit != 0)
                .map(|(_, z)| z.norm_sqr())
                .sum(),
            Repr::Density(m) => {
                let dim = 1usize << self.n;
                (0..dim)
                    .filter(|i| i & bit != 0)
                    .map(|i| m[i * dim + i].re)
                    .sum()
            }
        }
    }

    /// Full computational-basis distribution over all qubits.
    pub fn probabilities(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Pure(a) => a.iter().map(|z| z.norm_sqr()).collect(),
            Repr::Density(m) => {
                let dim = 1usize << self.n;
                (0..dim).map(|i| m[i * dim + i].re).collect()
            }
        }
    }

    /// Marginal distribution over the given qubits (ascending index order;
    /// bit `j` of the outcome index is the value of `qubits[j]`).
    pub fn marginal(&self, qubits: &[usize]) -> Vec<f64> {
        let full = self.probabilities();
        let mut out = vec![0.0; 1 << qubits.len()];
        for (i, p) in full.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            let mut key = 0usize;
            for (j, &q) in qubits.iter().enumerate() {
                key |= ((i >> q) & 1) << j;
            }
            out[key] += p;
        }
        out
    }

    /// Project `qubit` onto `outcome` and renormalize (pure backend only).
    pub(crate) fn collapse(&mut self, qubit: usize, outcome: u8) -> Result<(), SimError> {
        let Repr::Pure(amps) = &mut self.repr else {
            panic!("collapse is a trajectory-backend operation on pure states");
        };
        let bit = 1usize << qubit;
        let mut norm = 0.0f64;
        for (i, a) in amps.iter_mut().enumerate() {
            let has = ((i & bit) != 0) as u8;
            if has != outcome {
                *a = C_ZERO;
            } else {
                norm += a.norm_sqr();
            }
        }
        if norm <= 0.0 {
            return Err(SimError::BranchUnderflow);
        }
        let s = Complex64::new(1.0 / norm.sqrt(), 0.0);
        for a in amps.iter_mut() {
            *a *= s;
        }
        Ok(())
    }

    /// Reduced density matrix over `keep` (ascending), tracing out the rest.
    pub fn partial_trace(&self, keep: &[usize]) -> QuantumState {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let traced: Vec<usize> = (0..self.n).filter(|q| !keep.contains(q)).collect();
        let full = self.density_matrix();
        let dim = 1usize << self.n;
        let kdim = 1usize << keep.len();
        let mut out = vec![C_ZERO; kdim * kdim];
        let expand = |sub: usize, qubits: &[usize]| -> usize {
            let mut idx = 0usize;
            for (j, &q) in qubits.iter().enumerate() {
                idx |= ((sub >> j) & 1) << q;
            }
            idx
        };
        for r in 0..kdim {
            let rbase = expand(r, &keep);
            for c in 0..kdim {
                let cbase = expand(c, &keep);
                let mut acc = C_ZERO;
                for e in 0..(1usize << traced.len()) {
                    let off = expand(e, &traced);
                    acc += full[(rbase | off) * dim + (cbase | off)];
                }
                out[r * kdim + c] = acc;
            }
        }
        let roles = keep.iter().map(|&q| self.roles[q]).collect();
        QuantumState {
            n: keep.len(),
            repr: Repr::Density(out),
            roles,
        }
    }

    /// Relative phase arg(<1|rho|0>) of a single-qubit state, i.e. the phi
    /// of (|0> + e^{i phi}|1>)/sqrt(2) when the state has that form.
    pub fn relative_phase(&self) -> f64 {
        assert_eq!(self.n, 1, "relative phase is a single-qubit quantity");
        match &self.repr {
            Repr::Pure(a) => (a[1] * a[0].conj()).arg(),
            Repr::Density(m) => m[2].arg(), // row 1, col 0
        }
    }

    /// |<self|other>|^2 for two pure states.
    pub fn overlap_pure(&self, other: &QuantumState) -> f64 {
        let (Repr::Pure(a), Repr::Pure(b)) = (&self.repr, &other.repr) else {
            panic!("overlap_pure requires pure representations");
        };
        assert_eq!(a.len(), b.len());
        let ip: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        ip.norm_sqr()
    }

    // ------------------------------------------------------------------
    // Validation
    // ------------------------------------------------------------------

    fn check_density_basics(&self) -> Result<(), SimError> {
        let Repr::Density(m) = &self.repr else {
            return Ok(());
        };
        let dim = 1usize << self.n;
        let mut trace = 0.0f64;
        let mut herm = 0.0f64;
        for r in 0..dim {
            trace += m[r * dim + r].re;
            for c in (r..dim).rev() {
                let d = (m[r * dim + c] - m[c * dim + r].conj()).norm();
                herm = herm.max(d);
            }
        }
        if (trace - 1.0).abs() > NORM_TOL {
            return Err(SimError::InvalidDensity(format!(
                "trace deviates by {:.3e}",
                (trace - 1.0).abs()
            )));
        }
        if herm > NORM_TOL {
            return Err(SimError::InvalidDensity(format!(
                "hermiticity deviates by {herm:.3e}"
            )));
        }
        Ok(())
    }

    /// Full invariant check: norm/trace/hermiticity, plus positive
    /// semidefiniteness on small instances (dim <= 64).
    pub fn validate(&self) -> Result<(), SimError> {
        match &self.repr {
            Repr::Pure(a) => {
                let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                if (norm - 1.0).abs() > NORM_TOL {
                    return Err(SimError::NotNormalized((norm - 1.0).abs()));
                }
                Ok(())
            }
            Repr::Density(m) => {
                self.check_density_basics()?;
                let dim = 1usize << self.n;
                if dim <= 64 {
                    let min = hermitian_eigenvalues(m, dim)
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    if min < -1e-9 {
                        return Err(SimError::InvalidDensity(format!(
                            "negative eigenvalue {min:.3e}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Pure(a) => a.iter().map(|z| z.norm_sqr()).sum(),
            Repr::Density(m) => {
                let dim = 1usize << self.n;
                (0..dim).map(|i| m[i * dim + i].re).sum()
            }
        }
    }

    /// Random full-rank density matrix from the Ginibre ensemble.
    pub fn random_density<R: Rng>(n: usize, rng: &mut R) -> QuantumState {
        let dim = 1usize << n;
        let mut g = vec![C_ZERO; dim * dim];
        for z in g.iter_mut() {
            *z = Complex64::new(gaussian(rng), gaussian(rng));
        }
        // rho = G G† / tr(G G†)
        let mut m = vec![C_ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = C_ZERO;
                for k in 0..dim {
                    acc += g[r * dim + k] * g[c * dim + k].conj();
                }
                m[r * dim + c] = acc;
            }
        }
        let tr: f64 = (0..dim).map(|i| m[i * dim + i].re).sum();
        for z in m.iter_mut() {
            *z /= tr;
        }
        QuantumState {
            n,
            repr: Repr::Density(m),
            roles: vec![Role::Sensing; n],
        }
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; good enough for test-state generation.
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// ----------------------------------------------------------------------
// Bitwise kernels
// ----------------------------------------------------------------------

/// Density matrices below this dimension are processed sequentially; the
/// rayon dispatch overhead exceeds the work for small blocks.
const PAR_DIM: usize = 256;

// https://github.com/rayon-rs/rayon/blob/master/src/lib.rs
struct SendPtr<T>(*mut T);

// SAFETY: !Send/!Sync for raw pointers is a lint; the kernels below hand
// each worker a disjoint set of rows.
unsafe impl<T: Send> Send for SendPtr<T> {}
unsafe impl<T: Send> Sync for SendPtr<T> {}

impl<T> SendPtr<T> {
    fn get(&self) -> *mut T {
        self.0
    }
}

impl<T> Clone for SendPtr<T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T> Copy for SendPtr<T> {}

/// Row bases (indices with every `mask` bit clear) partition the row space
/// into disjoint blocks, so blocks may be processed in parallel.
fn row_bases(dim: usize, mask: usize) -> Vec<usize> {
    (0..dim).filter(|b| b & mask == 0).collect()
}

/// Apply a small matrix to an amplitude vector over the target qubits.
pub(crate) fn apply_to_vector(amps: &mut [Complex64], u: &CMat, targets: &[usize]) {
    let k = targets.len();
    let sub_dim = 1usize << k;
    let mask = target_mask(targets);
    let mut scratch = vec![C_ZERO; sub_dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (s, slot) in scratch.iter_mut().enumerate() {
            *slot = amps[block_index(base, targets, s)];
        }
        for r in 0..sub_dim {
            let mut acc = C_ZERO;
            for (c, &sc) in scratch.iter().enumerate() {
                acc += u.get(r, c) * sc;
            }
            amps[block_index(base, targets, r)] = acc;
        }
    }
}

/// Left-multiply: M[r, c] <- sum_b U[r_sub, b_sub] M[b, c] for every column.
/// Implemented blockwise over rows so each row stays a contiguous slice.
fn apply_left(mat: &mut [Complex64], dim: usize, u: &CMat, targets: &[usize]) {
    let sub_dim = 1usize << targets.len();
    let mask = target_mask(targets);
    let ptr = SendPtr(mat.as_mut_ptr());
    let work = |base: usize| {
        let mut rows = vec![vec![C_ZERO; dim]; sub_dim];
        for (s, row) in rows.iter_mut().enumerate() {
            let r = block_index(base, targets, s);
            // SAFETY: rows within one base block are disjoint across bases.
            let src = unsafe { std::slice::from_raw_parts(ptr.get().add(r * dim), dim) };
            row.copy_from_slice(src);
        }
        for s in 0..sub_dim {
            let r = block_index(base, targets, s);
            let out = unsafe { std::slice::from_raw_parts_mut(ptr.get().add(r * dim), dim) };
            out.fill(C_ZERO);
            for (b, row) in rows.iter().enumerate() {
                let coef = u.get(s, b);
                if coef == C_ZERO {
                    continue;
                }
                for (o, v) in out.iter_mut().zip(row.iter()) {
                    *o += coef * v;
                }
            }
        }
    };
    if dim >= PAR_DIM {
        row_bases(dim, mask).into_par_iter().for_each(work);
    } else {
        row_bases(dim, mask).into_iter().for_each(work);
    }
}

/// Right-multiply by U† realized as applying conj(U) along the column index
/// of every row.
fn apply_right(mat: &mut [Complex64], dim: usize, u_conj: &CMat, targets: &[usize]) {
    if dim >= PAR_DIM {
        mat.par_chunks_mut(dim)
            .for_each(|row| apply_to_vector(row, u_conj, targets));
    } else {
        mat.chunks_mut(dim)
            .for_each(|row| apply_to_vector(row, u_conj, targets));
    }
}

fn kraus_dense(mat: &mut [Complex64], dim: usize, channel: &QuantumChannel, targets: &[usize]) {
    let mut acc = vec![C_ZERO; mat.len()];
    let mut tmp = vec![C_ZERO; mat.len()];
    for kraus in channel.kraus_ops() {
        tmp.copy_from_slice(mat);
        apply_left(&mut tmp, dim, kraus, targets);
        apply_right(&mut tmp, dim, &kraus.conjugate(), targets);
        for (a, t) in acc.iter_mut().zip(tmp.iter()) {
            *a += t;
        }
    }
    mat.copy_from_slice(&acc);
}

/// Run a per-row-base kernel, in parallel for large matrices. Each base
/// owns the disjoint row set {base | embed(s)}.
fn for_each_row_base<F: Fn(usize) + Send + Sync>(dim: usize, mask: usize, work: F) {
    if dim >= PAR_DIM {
        row_bases(dim, mask).into_par_iter().for_each(work);
    } else {
        row_bases(dim, mask).into_iter().for_each(work);
    }
}

/// rho -> (1-p) rho + p (I/2^k ⊗ tr_targets rho), done per subblock pair.
fn depolarize_dense(mat: &mut [Complex64], dim: usize, targets: &[usize], p: f64) {
    let k = targets.len();
    let sub_dim = 1usize << k;
    let mask = target_mask(targets);
    let keep = 1.0 - p;
    let mix = p / sub_dim as f64;
    let ptr = SendPtr(mat.as_mut_ptr());
    for_each_row_base(dim, mask, |rbase| {
        // SAFETY: this base's rows are untouched by other bases.
        let m = unsafe { std::slice::from_raw_parts_mut(ptr.get(), dim * dim) };
        for cbase in 0..dim {
            if cbase & mask != 0 {
                continue;
            }
            let mut block_trace = C_ZERO;
            for s in 0..sub_dim {
                let r = block_index(rbase, targets, s);
                let c = block_index(cbase, targets, s);
                block_trace += m[r * dim + c];
            }
            for a in 0..sub_dim {
                let r = block_index(rbase, targets, a);
                for b in 0..sub_dim {
                    let c = block_index(cbase, targets, b);
                    let mut v = m[r * dim + c] * keep;
                    if a == b {
                        v += block_trace * mix;
                    }
                    m[r * dim + c] = v;
                }
            }
        }
    });
}

/// Subblock update for thermal relaxation on one qubit: populations mix with
/// weight (1 - e1), coherences scale by `f`.
fn thermal_dense(mat: &mut [Complex64], dim: usize, qubit: usize, e1: f64, f: f64) {
    let bit = 1usize << qubit;
    let ptr = SendPtr(mat.as_mut_ptr());
    for_each_row_base(dim, bit, |rbase| {
        let m = unsafe { std::slice::from_raw_parts_mut(ptr.get(), dim * dim) };
        for cbase in 0..dim {
            if cbase & bit != 0 {
                continue;
            }
            let i00 = rbase * dim + cbase;
            let i01 = rbase * dim + (cbase | bit);
            let i10 = (rbase | bit) * dim + cbase;
            let i11 = (rbase | bit) * dim + (cbase | bit);
            let v11 = m[i11];
            m[i00] += v11 * (1.0 - e1);
            m[i11] = v11 * e1;
            m[i01] *= f;
            m[i10] *= f;
        }
    });
}

/// Scale coherences of one qubit by `factor` (0 = full dephasing).
fn dephase_factor_dense(mat: &mut [Complex64], dim: usize, qubit: usize, factor: f64) {
    let bit = 1usize << qubit;
    let scale_row = |(r, row): (usize, &mut [Complex64])| {
        for (c, v) in row.iter_mut().enumerate() {
            if (r & bit) != (c & bit) {
                *v *= factor;
            }
        }
    };
    if dim >= PAR_DIM {
        mat.par_chunks_mut(dim).enumerate().for_each(scale_row);
    } else {
        mat.chunks_mut(dim).enumerate().for_each(scale_row);
    }
}

fn bitflip_dense(mat: &mut [Complex64], dim: usize, qubit: usize, p: f64) {
    let bit = 1usize << qubit;
    let keep = 1.0 - p;
    let ptr = SendPtr(mat.as_mut_ptr());
    for_each_row_base(dim, bit, |rbase| {
        let m = unsafe { std::slice::from_raw_parts_mut(ptr.get(), dim * dim) };
        for cbase in 0..dim {
            if cbase & bit != 0 {
                continue;
            }
            let i00 = rbase * dim + cbase;
            let i01 = rbase * dim + (cbase | bit);
            let i10 = (rbase | bit) * dim + cbase;
            let i11 = (rbase | bit) * dim + (cbase | bit);
            let (v00, v01, v10, v11) = (m[i00], m[i01], m[i10], m[i11]);
            m[i00] = v00 * keep + v11 * p;
            m[i11] = v11 * keep + v00 * p;
            m[i01] = v01 * keep + v10 * p;
            m[i10] = v10 * keep + v01 * p;
        }
    });
}
