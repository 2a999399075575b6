//! Hermitian eigendecomposition helpers backed by nalgebra.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;

fn to_dmatrix(mat: &[Complex64], dim: usize) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(dim, dim, |r, c| {
        let z = mat[r * dim + c];
        Complex::new(z.re, z.im)
    })
}

/// Eigenvalues of a Hermitian matrix given as a row-major slice.
pub fn hermitian_eigenvalues(mat: &[Complex64], dim: usize) -> Vec<f64> {
    let m = to_dmatrix(mat, dim);
    m.symmetric_eigenvalues().iter().copied().collect()
}

/// Principal square root of a Hermitian PSD matrix (small negative
/// eigenvalues from roundoff are clamped to zero).
pub fn hermitian_sqrt(mat: &[Complex64], dim: usize) -> Vec<Complex64> {
    let m = to_dmatrix(mat, dim);
    let eig = m.symmetric_eigen();
    let sqrt_vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|e| e.max(0.0).sqrt())
        .collect();
    // V sqrt(D) V†
    let v = eig.eigenvectors;
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = Complex::new(0.0, 0.0);
            for (k, &sv) in sqrt_vals.iter().enumerate() {
                acc += v[(r, k)] * v[(c, k)].conj() * Complex::new(sv, 0.0);
            }
            out[r * dim + c] = Complex64::new(acc.re, acc.im);
        }
    }
    out
}

/// Trace of the product of two row-major square matrices.
pub fn trace_product(a: &[Complex64], b: &[Complex64], dim: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..dim {
        for k in 0..dim {
            acc += a[r * dim + k] * b[k * dim + r];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_pauli_z() {
        let z = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ];
        let mut eig = hermitian_eigenvalues(&z, 2);
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] + 1.0).abs() < 1e-12);
        assert!((eig[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        // A = diag(4, 9) -> sqrt = diag(2, 3)
        let a = vec![
            Complex64::new(4.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(9.0, 0.0),
        ];
        let s = hermitian_sqrt(&a, 2);
        assert!((s[0].re - 2.0).abs() < 1e-12);
        assert!((s[3].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complex_hermitian_eigen() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let m = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(1.0, 0.0),
        ];
        let mut eig = hermitian_eigenvalues(&m, 2);
        eig.sort_by(f64::total_cmp);
        assert!(eig[0].abs() < 1e-12);
        assert!((eig[1] - 2.0).abs() < 1e-12);
    }
}
