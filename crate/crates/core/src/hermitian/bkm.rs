//! Logarithmic-mean divided differences: the operators `T_rho`, `T_rho^{-1}`
//! and the Bogoliubov-Kubo-Mori inner product built from them.

use num_complex::Complex64;

use super::{DensityMatrix, HermitianMatrix, SpectralDecomposition, TangentMatrix};
use crate::error::{QsafError, Result};

/// Below this relative separation the series expansion replaces the quotient.
const SERIES_THRESHOLD: f64 = 1e-8;

/// Logarithmic mean `(x - y) / (log x - log y)`, with `L(x, x) = x`.
pub fn log_mean(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(QsafError::InvalidArgument(format!(
            "logarithmic mean needs positive finite arguments, got ({x}, {y})"
        )));
    }
    Ok(log_mean_positive(x, y))
}

pub(crate) fn log_mean_positive(x: f64, y: f64) -> f64 {
    if x == y {
        return x;
    }
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let diff = hi - lo;
    // log(hi/lo) via log1p keeps full relative accuracy for close arguments
    let u = (diff / lo).ln_1p();
    let value = if diff > SERIES_THRESHOLD * hi {
        diff / u
    } else {
        // sqrt(xy) sinh(u/2)/(u/2)
        let u2 = u * u;
        (lo * hi).sqrt() * (1.0 + u2 / 24.0 + u2 * u2 / 1920.0)
    };
    value.clamp(lo, hi)
}

fn check_dims(rho: &DensityMatrix, x: &HermitianMatrix) -> Result<()> {
    if rho.dim() != x.dim() {
        return Err(QsafError::DimensionMismatch {
            expected: rho.dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// Applies the entrywise kernel `k(lambda_i, lambda_j)` in the eigenbasis.
fn divided_difference<F>(spec: &SpectralDecomposition, x: &HermitianMatrix, kernel: F) -> HermitianMatrix
where
    F: Fn(f64, f64) -> f64,
{
    let lambda = spec.eigenvalues();
    let mut xt = spec.to_eigenbasis(x);
    let c = lambda.len();
    for j in 0..c {
        for i in 0..c {
            xt[(i, j)] *= Complex64::new(kernel(lambda[i], lambda[j]), 0.0);
        }
    }
    spec.from_eigenbasis(&xt)
}

/// `T_rho[X]` for a positive spectrum: the derivative of `log_m` at `rho`.
pub(crate) fn tmap_spectral(spec: &SpectralDecomposition, x: &HermitianMatrix) -> HermitianMatrix {
    divided_difference(spec, x, |a, b| 1.0 / log_mean_positive(a, b))
}

/// `T_rho^{-1}[X] = int_0^1 rho^{1-s} X rho^s ds` for a positive spectrum.
pub(crate) fn tmap_inv_spectral(spec: &SpectralDecomposition, x: &HermitianMatrix) -> HermitianMatrix {
    divided_difference(spec, x, log_mean_positive)
}

/// `T_rho[X] = d/dt log_m(rho + tX) |_{t=0}`.
pub fn tmap(rho: &DensityMatrix, x: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_dims(rho, x)?;
    Ok(tmap_spectral(rho.spectrum(), x))
}

/// `T_rho^{-1}[X]`, the inverse of [`tmap`].
pub fn tmap_inv(rho: &DensityMatrix, x: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_dims(rho, x)?;
    Ok(tmap_inv_spectral(rho.spectrum(), x))
}

/// BKM metric `g_rho(X, Y) = <T_rho[X], Y>` on traceless directions.
pub fn bkm_metric(rho: &DensityMatrix, x: &TangentMatrix, y: &TangentMatrix) -> Result<f64> {
    check_dims(rho, x)?;
    check_dims(rho, y)?;
    // evaluated in the eigenbasis: sum_ij conj(X~_ij) Y~_ij / L(l_i, l_j)
    let spec = rho.spectrum();
    let lambda = spec.eigenvalues();
    let xt = spec.to_eigenbasis(x);
    let yt = spec.to_eigenbasis(y);
    let c = lambda.len();
    let mut acc = 0.0;
    for j in 0..c {
        for i in 0..c {
            acc += (xt[(i, j)].conj() * yt[(i, j)]).re / log_mean_positive(lambda[i], lambda[j]);
        }
    }
    Ok(acc)
}

#[cfg(test)]
fn bkm_metric_direct(rho: &DensityMatrix, x: &HermitianMatrix, y: &HermitianMatrix) -> f64 {
    super::inner_unchecked(tmap_spectral(rho.spectrum(), x).as_matrix(), y.as_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::project_traceless;

    #[test]
    fn log_mean_equal_arguments() {
        for a in [1e-12, 0.3, 1.0, 7.5, 1e8] {
            assert_eq!(log_mean(a, a).unwrap(), a);
        }
    }

    #[test]
    fn log_mean_direct_formula() {
        let e = std::f64::consts::E;
        assert!((log_mean(1.0, e).unwrap() - (e - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn log_mean_is_symmetric_and_bracketed() {
        for &(x, y) in &[(0.1, 0.2), (1.0, 1.0 + 1e-9), (3.0, 1e-6), (2.0, 2.0 - 1e-12)] {
            let a = log_mean(x, y).unwrap();
            let b = log_mean(y, x).unwrap();
            assert_eq!(a, b);
            assert!(a >= x.min(y) && a <= x.max(y));
        }
    }

    #[test]
    fn log_mean_rejects_nonpositive() {
        assert!(log_mean(0.0, 1.0).is_err());
        assert!(log_mean(1.0, -2.0).is_err());
    }

    #[test]
    fn tmap_at_barycenter_scales_by_dimension() {
        let c = 3;
        let rho = DensityMatrix::maximally_mixed(c, 1.0);
        let x = HermitianMatrix::from_real_diagonal(&[0.3, -1.0, 2.0]);
        let t = tmap(&rho, &x).unwrap();
        assert!(t.distance(&x.scale(c as f64)) < 1e-14);
        let ti = tmap_inv(&rho, &x).unwrap();
        assert!(ti.distance(&x.scale(1.0 / c as f64)) < 1e-15);
    }

    #[test]
    fn tmap_of_rho_is_identity_and_inverse_of_identity_is_rho() {
        let rho = DensityMatrix::new(HermitianMatrix::from_real_diagonal(&[0.2, 0.3, 0.5])).unwrap();
        let t = tmap(&rho, rho.as_hermitian()).unwrap();
        assert!(t.distance(&HermitianMatrix::identity(3)) < 1e-14);
        let ti = tmap_inv(&rho, &HermitianMatrix::identity(3)).unwrap();
        assert!(ti.distance(rho.as_hermitian()) < 1e-15);
    }

    #[test]
    fn metric_at_barycenter() {
        let c = 2;
        let rho = DensityMatrix::maximally_mixed(c, 1.0);
        let x = project_traceless(&HermitianMatrix::from_real_diagonal(&[1.0, 0.0]));
        let y = project_traceless(&HermitianMatrix::from_real_diagonal(&[0.0, 3.0]));
        let g = bkm_metric(&rho, &x, &y).unwrap();
        let plain = crate::hermitian::frobenius_inner(&x, &y).unwrap();
        assert!((g - c as f64 * plain).abs() < 1e-14);
        assert!((bkm_metric_direct(&rho, &x, &y) - g).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = DensityMatrix::maximally_mixed(2, 1.0);
        assert!(tmap(&rho, &HermitianMatrix::identity(3)).is_err());
    }
}
