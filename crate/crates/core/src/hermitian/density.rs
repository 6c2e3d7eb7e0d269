use serde::{Deserialize, Serialize};

use super::{spectral_decompose, CMatrix, HermitianMatrix, SpectralDecomposition};
use crate::error::{QsafError, Result};

/// Relative trace tolerance of a density matrix.
const TRACE_TOL: f64 = 1e-10;

/// Smallest admissible eigenvalue relative to the trace scale for states
/// built from explicit matrices. States below this floor are rejected
/// instead of clamped.
pub const EIGENVALUE_FLOOR: f64 = 1e-14;

/// A positive definite Hermitian matrix with fixed trace `tau`.
///
/// The spectral decomposition is computed once on construction and kept
/// alongside the matrix; every BKM operator needs it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    trace_scale: f64,
    spectrum: SpectralDecomposition,
}

impl DensityMatrix {
    /// Unit-trace density matrix.
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        Self::with_trace(h, 1.0)
    }

    /// Density matrix with trace `tau`.
    pub fn with_trace(h: HermitianMatrix, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let trace = h.trace();
        if !trace.is_finite() {
            return Err(QsafError::NonFinite { iteration: None });
        }
        if (trace - tau).abs() > TRACE_TOL * tau {
            return Err(QsafError::TraceMismatch {
                trace,
                expected: tau,
            });
        }
        let spectrum = spectral_decompose(&h)?;
        check_floor(&spectrum, tau)?;
        Ok(Self {
            matrix: h,
            trace_scale: tau,
            spectrum,
        })
    }

    /// Hermitizes an arbitrary complex matrix first.
    pub fn from_matrix(m: &CMatrix, tau: f64) -> Result<Self> {
        Self::with_trace(HermitianMatrix::hermitian_part(m)?, tau)
    }

    /// Builds the state `U Diag(lambda) U*` directly from its spectrum.
    pub fn from_spectrum(spectrum: SpectralDecomposition, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        check_floor(&spectrum, tau)?;
        let sum: f64 = spectrum.eigenvalues().iter().sum();
        if (sum - tau).abs() > TRACE_TOL * tau {
            return Err(QsafError::TraceMismatch {
                trace: sum,
                expected: tau,
            });
        }
        let matrix = spectrum.reconstruct();
        Ok(Self {
            matrix,
            trace_scale: tau,
            spectrum,
        })
    }

    /// Like [`Self::from_spectrum`] but only requires positive eigenvalues.
    /// Used for images of finite coordinates under `Gamma`, which stay exact
    /// below the floor until the exponentials underflow.
    pub(crate) fn from_coordinate_spectrum(spectrum: SpectralDecomposition, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let min = spectrum.min_eigenvalue();
        if !(min > 0.0) {
            return Err(QsafError::NotPositiveDefinite { min_eigenvalue: min });
        }
        let matrix = spectrum.reconstruct();
        Ok(Self {
            matrix,
            trace_scale: tau,
            spectrum,
        })
    }

    /// `tau I / c`, the barycenter of the manifold.
    pub fn maximally_mixed(dim: usize, tau: f64) -> Self {
        let spectrum = SpectralDecomposition::from_parts(
            vec![tau / dim as f64; dim],
            CMatrix::identity(dim, dim),
        )
        .expect("square identity basis");
        Self {
            matrix: HermitianMatrix::identity(dim).scale(tau / dim as f64),
            trace_scale: tau,
            spectrum,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace_scale(&self) -> f64 {
        self.trace_scale
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn as_matrix(&self) -> &CMatrix {
        self.matrix.as_matrix()
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    /// `log_m(rho)` through the cached spectrum.
    pub fn log(&self) -> HermitianMatrix {
        self.spectrum.map(f64::ln)
    }

    /// `tau tr(rho) - tr(rho^2)`; zero exactly on pure states and equal to
    /// `tr rho - tr rho^2` for unit trace.
    pub fn purity_gap(&self) -> f64 {
        let tr_sq: f64 = self.eigenvalues().iter().map(|l| l * l).sum();
        (self.trace_scale * self.matrix.trace() - tr_sq).max(0.0)
    }

    /// The unit-trace state `rho / tau`.
    pub fn normalized(&self) -> DensityMatrix {
        if self.trace_scale == 1.0 {
            return self.clone();
        }
        let inv = 1.0 / self.trace_scale;
        let values: Vec<f64> = self.eigenvalues().iter().map(|l| l * inv).collect();
        let spectrum = SpectralDecomposition::from_parts(values, self.spectrum.eigenvectors().clone())
            .expect("same basis");
        Self {
            matrix: self.matrix.scale(inv),
            trace_scale: 1.0,
            spectrum,
        }
    }

    /// Eigenvector of the largest eigenvalue.
    pub fn dominant_eigenvector(&self) -> Vec<num_complex::Complex64> {
        self.spectrum.eigenvector(self.dim() - 1)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(QsafError::InvalidArgument(format!(
            "trace scale must be positive and finite, got {tau}"
        )));
    }
    Ok(())
}

fn check_floor(spectrum: &SpectralDecomposition, tau: f64) -> Result<()> {
    let min = spectrum.min_eigenvalue();
    if !(min >= EIGENVALUE_FLOOR * tau) {
        return Err(QsafError::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    Ok(())
}
