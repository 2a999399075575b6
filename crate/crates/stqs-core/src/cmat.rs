//! Small dense complex matrices used for gate unitaries and Kraus operators.
//!
//! These stay tiny (2x2 up to 8x8 for three-qubit gates), so a flat row-major
//! `Vec` keeps the hot bitwise-application kernels in `state` simple and fast.

use num_complex::Complex64;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major complex matrix, indexed as `m[(row, col)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C_ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C_ONE;
        }
        m
    }

    /// Build from a row-major slice of `dim * dim` entries.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must be dim^2");
        Self {
            dim,
            data: entries.to_vec(),
        }
    }

    /// Diagonal matrix from its diagonal entries.
    pub fn diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] = v;
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.data[c * self.dim + r] = self.data[r * self.dim + c].conj();
            }
        }
        out
    }

    /// Entrywise conjugate (no transpose).
    pub fn conjugate(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == C_ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }

    /// max_ij |(A - B)_ij|
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// ‖U†U − I‖_max, the unitarity defect.
    pub fn unitarity_defect(&self) -> f64 {
        self.dagger()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        let mut out = Self::zeros(n * m);
        for r1 in 0..n {
            for c1 in 0..n {
                let a = self.data[r1 * n + c1];
                if a == C_ZERO {
                    continue;
                }
                for r2 in 0..m {
                    for c2 in 0..m {
                        out.data[(r1 * m + r2) * (n * m) + (c1 * m + c2)] =
                            a * rhs.data[r2 * m + c2];
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_unitary() {
        assert!(CMat::identity(4).unitarity_defect() < 1e-15);
    }

    #[test]
    fn dagger_of_diagonal_conjugates() {
        let m = CMat::diagonal(&[C_ONE, Complex64::new(0.0, 1.0)]);
        assert_eq!(m.dagger().get(1, 1), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn kron_dims_multiply() {
        let a = CMat::identity(2);
        let b = CMat::identity(4);
        assert_eq!(a.kron(&b).dim(), 8);
    }
}
