use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CMatrix, HermitianMatrix};
use crate::error::{QsafError, Result};

/// `A = U Diag(lambda) U*` with ascending eigenvalues and unitary `U`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from an eigenvalue list and unitary columns.
    /// The pairs are sorted into ascending order.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Result<Self> {
        let c = eigenvalues.len();
        if eigenvectors.nrows() != c || eigenvectors.ncols() != c {
            return Err(QsafError::DimensionMismatch {
                expected: c,
                found: eigenvectors.ncols(),
            });
        }
        Ok(sorted(eigenvalues, eigenvectors))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Column `k` of `U`.
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    /// `U Diag(f(lambda)) U*`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.with_eigenvalues(&values)
    }

    /// `U Diag(values) U*` for an arbitrary replacement spectrum.
    pub fn with_eigenvalues(&self, values: &[f64]) -> HermitianMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &v) in values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(v);
        }
        HermitianMatrix::from_hermitian_unchecked(scaled * self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.with_eigenvalues(&self.eigenvalues)
    }

    /// `U* X U`: coordinates of `X` in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &HermitianMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * x.as_matrix() * &self.eigenvectors
    }

    /// `U Y U*`, Hermitized.
    pub fn from_eigenbasis(&self, y: &CMatrix) -> HermitianMatrix {
        HermitianMatrix::from_hermitian_unchecked(&self.eigenvectors * y * self.eigenvectors.adjoint())
    }
}

fn sorted(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> SpectralDecomposition {
    let c = eigenvalues.len();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    if order.iter().enumerate().all(|(i, &k)| i == k) {
        return SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        };
    }
    let values = order.iter().map(|&k| eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(c, c, |i, j| eigenvectors[(i, order[j])]);
    SpectralDecomposition {
        eigenvalues: values,
        eigenvectors: vectors,
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn spectral_decompose(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let c = a.dim();
    if !a.is_finite() {
        return Err(QsafError::NonFinite { iteration: None });
    }
    if c == 1 {
        return Ok(SpectralDecomposition {
            eigenvalues: vec![a.as_matrix()[(0, 0)].re],
            eigenvectors: CMatrix::identity(1, 1),
        });
    }
    let eig = SymmetricEigen::try_new(a.as_matrix().clone(), f64::EPSILON, 10_000 * c)
        .ok_or(QsafError::EigenNonConvergence { dim: c })?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(QsafError::EigenNonConvergence { dim: c });
    }
    Ok(sorted(values, eig.eigenvectors))
}

/// Matrix exponential, evaluated spectrally.
pub fn matrix_exp(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(spectral_decompose(a)?.map(f64::exp))
}

/// Principal matrix logarithm of a positive definite matrix.
pub fn matrix_log(p: &HermitianMatrix) -> Result<HermitianMatrix> {
    let dec = spectral_decompose(p)?;
    let min = dec.min_eigenvalue();
    if min <= 0.0 {
        return Err(QsafError::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    Ok(dec.map(f64::ln))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_spectrum() {
        let dec = spectral_decompose(&HermitianMatrix::identity(4)).unwrap();
        assert!(dec.eigenvalues().iter().all(|&l| (l - 1.0).abs() < 1e-15));
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let dec = spectral_decompose(&HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        let l = dec.eigenvalues();
        assert!((l[0] - 1.0).abs() < 1e-14 && (l[1] - 2.0).abs() < 1e-14 && (l[2] - 3.0).abs() < 1e-14);
        assert!(dec.reconstruct().distance(&HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0])) < 1e-14);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = matrix_exp(&HermitianMatrix::zeros(3)).unwrap();
        assert!(e.distance(&HermitianMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn log_of_maximally_mixed() {
        let c = 5;
        let p = HermitianMatrix::identity(c).scale(1.0 / c as f64);
        let l = matrix_log(&p).unwrap();
        let expected = HermitianMatrix::identity(c).scale(-(c as f64).ln());
        assert!(l.distance(&expected) < 1e-14);
    }

    #[test]
    fn log_rejects_indefinite_input() {
        let p = HermitianMatrix::from_real_diagonal(&[1.0, -0.5]);
        assert!(matches!(
            matrix_log(&p),
            Err(QsafError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn non_finite_input_is_reported() {
        let p = HermitianMatrix::from_real_diagonal(&[1.0, f64::NAN]);
        assert!(spectral_decompose(&p).is_err());
    }
}
