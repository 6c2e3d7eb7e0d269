//! Dense complex Hermitian matrices and the operators of the BKM geometry.
//!
//! Everything here works with `c x c` complex matrices stored in a
//! [`nalgebra::DMatrix`]. Matrix functions (`exp`, `log`, the logarithmic
//! mean operators) are evaluated in the eigenbasis, so every routine reduces
//! to one Hermitian eigendecomposition plus `O(c^3)` products.

pub(crate) mod bkm;
mod density;
mod spectral;

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsafError, Result};

pub use bkm::{bkm_metric, log_mean, tmap, tmap_inv};
pub use density::DensityMatrix;
pub use spectral::{matrix_exp, matrix_log, spectral_decompose, SpectralDecomposition};

/// Complex `c x c` matrix, the storage type behind every Hermitian wrapper.
pub type CMatrix = DMatrix<Complex64>;

/// Relative asymmetry accepted by [`HermitianMatrix::new`] before the input
/// is symmetrized.
const HERMITIAN_TOL: f64 = 1e-10;

/// Trace tolerance per dimension for [`TangentMatrix::new`].
const TRACELESS_TOL: f64 = 1e-12;

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// A square complex matrix with `A = A*`.
///
/// Constructors always store the exact Hermitian part `(A + A*)/2`, so the
/// symmetry invariant holds bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    m: CMatrix,
}

impl HermitianMatrix {
    /// Wraps `m` after checking that it is square and Hermitian up to
    /// `1e-10 * max(1, |m|_F)`.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        let scale = m.norm().max(1.0);
        let asymmetry = (&m - m.adjoint()).norm();
        if !asymmetry.is_finite() {
            return Err(QsafError::NonFinite { iteration: None });
        }
        if asymmetry > HERMITIAN_TOL * scale {
            return Err(QsafError::NotHermitian { asymmetry });
        }
        Ok(Self { m: hermitize(&m) })
    }

    /// Takes the Hermitian part `(m + m*)/2` of an arbitrary square matrix.
    pub fn hermitian_part(m: &CMatrix) -> Result<Self> {
        check_square(m)?;
        Ok(Self { m: hermitize(m) })
    }

    /// Wraps a real symmetric matrix.
    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let c = diag.len();
        let mut m = CMatrix::zeros(c, c);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { m }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    /// `v v*` for a complex vector `v`.
    pub fn outer(v: &[Complex64]) -> Self {
        let c = v.len();
        let m = CMatrix::from_fn(c, c, |i, j| v[i] * v[j].conj());
        Self { m: hermitize(&m) }
    }

    /// Crate-internal constructor for products that are Hermitian by algebra.
    pub(crate) fn from_hermitian_unchecked(m: CMatrix) -> Self {
        Self { m: hermitize(&m) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    /// Real trace; the imaginary part of a Hermitian trace is zero.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Real diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            m: &self.m * Complex64::new(a, 0.0),
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self {
            m: &self.m + &other.m * Complex64::new(a, 0.0),
        }
    }

    /// `V A V*`; Hermitian for any square `V`.
    pub fn conjugate_by(&self, v: &CMatrix) -> Self {
        Self::from_hermitian_unchecked(v * &self.m * v.adjoint())
    }

    /// Frobenius norm of the commutator `[A, B]`.
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        (&self.m * &other.m - &other.m * &self.m).norm()
    }

    /// Frobenius distance `|A - B|_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.m - &other.m).norm()
    }

    /// Ordinary matrix product, which is Hermitian only for commuting factors.
    pub fn product(&self, other: &Self) -> CMatrix {
        &self.m * &other.m
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(QsafError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(QsafError::InvalidArgument("empty matrix".into()));
    }
    Ok(())
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: &self.m + &rhs.m }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: &self.m - &rhs.m }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix { m: -&self.m }
    }
}

/// `tr(AB)` for Hermitian `A`, `B`.
pub fn frobenius_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QsafError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(inner_unchecked(a.as_matrix(), b.as_matrix()))
}

/// `Re tr(AB) = Re sum_ij A_ij conj(B_ij)` for Hermitian `B`.
pub(crate) fn inner_unchecked(a: &CMatrix, b: &CMatrix) -> f64 {
    let z: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
    debug_assert!(z.im.abs() <= 1e-10 * (a.norm() * b.norm()).max(1e-300));
    z.re
}

/// Orthogonal projection `A - (tr A / c) I` onto the traceless subspace.
pub fn project_traceless(a: &HermitianMatrix) -> TangentMatrix {
    let c = a.dim();
    let shift = a.trace() / c as f64;
    let mut m = a.as_matrix().clone();
    for i in 0..c {
        m[(i, i)] -= Complex64::new(shift, 0.0);
    }
    TangentMatrix(HermitianMatrix { m })
}

/// A traceless Hermitian matrix: a tangent vector of the density manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentMatrix(HermitianMatrix);

impl TangentMatrix {
    /// Accepts `h` if `|tr h| <= 1e-12 * dim * max(1, |h|_F)`.
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let trace = h.trace();
        let tol = TRACELESS_TOL * h.dim() as f64 * h.norm().max(1.0);
        if trace.abs() > tol {
            return Err(QsafError::NotTraceless { trace });
        }
        Ok(Self(h))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(HermitianMatrix::zeros(dim))
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.0
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.scale(a))
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self(self.0.axpy(a, &other.0))
    }

    pub fn conjugate_by_unitary(&self, u: &CMatrix) -> Self {
        Self(self.0.conjugate_by(u))
    }
}

impl std::ops::Deref for TangentMatrix {
    type Target = HermitianMatrix;
    fn deref(&self) -> &HermitianMatrix {
        &self.0
    }
}

impl Add for &TangentMatrix {
    type Output = TangentMatrix;
    fn add(self, rhs: &TangentMatrix) -> TangentMatrix {
        TangentMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &TangentMatrix {
    type Output = TangentMatrix;
    fn sub(self, rhs: &TangentMatrix) -> TangentMatrix {
        TangentMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &TangentMatrix {
    type Output = TangentMatrix;
    fn mul(self, rhs: f64) -> TangentMatrix {
        self.scale(rhs)
    }
}

impl Neg for &TangentMatrix {
    type Output = TangentMatrix;
    fn neg(self) -> TangentMatrix {
        TangentMatrix(-&self.0)
    }
}
