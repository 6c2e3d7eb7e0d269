//! Maps on the manifold of positive definite density matrices.
//!
//! Points are parametrized globally by traceless coordinates through
//! `Gamma_tau(X) = tau exp_m(X) / tr exp_m(X)`. With `tau = 1` all formulas are
//! the usual ones; a general trace scale enters through `rho / tau`.

use serde::{Deserialize, Serialize};

use crate::error::{QsafError, Result};
use crate::hermitian::bkm::{tmap_inv_spectral, tmap_spectral};
use crate::hermitian::{
    inner_unchecked, project_traceless, spectral_decompose, DensityMatrix, HermitianMatrix, SpectralDecomposition,
    TangentMatrix,
};

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(QsafError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `log tr exp_m` of a spectrum, via log-sum-exp.
fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `psi(X) = log tr exp_m(X)`.
pub fn psi(x: &HermitianMatrix) -> Result<f64> {
    Ok(log_sum_exp(spectral_decompose(x)?.eigenvalues()))
}

/// The traceless coordinate `X` of a state `rho = Gamma_tau(X)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaCoordinate {
    value: TangentMatrix,
}

impl GammaCoordinate {
    pub fn new(value: TangentMatrix) -> Self {
        Self { value }
    }

    pub fn of(rho: &DensityMatrix) -> Self {
        Self { value: gamma_inv(rho) }
    }

    pub fn value(&self) -> &TangentMatrix {
        &self.value
    }

    pub fn into_value(self) -> TangentMatrix {
        self.value
    }

    /// `log tr exp_m(X)`.
    pub fn psi(&self) -> Result<f64> {
        psi(&self.value)
    }

    pub fn to_density(&self, tau: f64) -> Result<DensityMatrix> {
        gamma_tau(&self.value, tau)
    }
}

/// `Gamma(Z)` with unit trace.
pub fn gamma(z: &HermitianMatrix) -> Result<DensityMatrix> {
    gamma_tau(z, 1.0)
}

/// `tau exp_m(Z) / tr exp_m(Z)`, evaluated spectrally after subtracting the
/// largest eigenvalue.
pub fn gamma_tau(z: &HermitianMatrix, tau: f64) -> Result<DensityMatrix> {
    let spec = spectral_decompose(z)?;
    gamma_from_spectrum(&spec, tau)
}

fn gamma_from_spectrum(spec: &SpectralDecomposition, tau: f64) -> Result<DensityMatrix> {
    let max = spec.max_eigenvalue();
    let e: Vec<f64> = spec.eigenvalues().iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    let values: Vec<f64> = e.into_iter().map(|x| tau * x / sum).collect();
    let out = SpectralDecomposition::from_parts(values, spec.eigenvectors().clone())?;
    DensityMatrix::from_coordinate_spectrum(out, tau)
}

/// `Pi[log_m rho]`, the inverse of [`gamma_tau`] for any trace scale.
pub fn gamma_inv(rho: &DensityMatrix) -> TangentMatrix {
    project_traceless(&rho.log())
}

/// `dGamma(H)[Y] = T_rho^{-1}[Y - (<rho, Y>/tau) I]` with `rho = Gamma_tau(H)`.
pub fn dgamma(h: &TangentMatrix, y: &TangentMatrix, tau: f64) -> Result<TangentMatrix> {
    check_dims(h.dim(), y.dim())?;
    let rho = gamma_tau(h, tau)?;
    Ok(dgamma_at(&rho, y))
}

/// [`dgamma`] at the point `rho` itself.
pub fn dgamma_at(rho: &DensityMatrix, y: &HermitianMatrix) -> TangentMatrix {
    replicator_unchecked(rho, y)
}

/// `dGamma^{-1}(rho)[X] = Pi[T_rho[X]]`.
pub fn dgamma_inv(rho: &DensityMatrix, x: &TangentMatrix) -> Result<TangentMatrix> {
    check_dims(rho.dim(), x.dim())?;
    Ok(project_traceless(&tmap_spectral(rho.spectrum(), x)))
}

/// Replicator map `R_rho[X] = T_rho^{-1}[X] - (<rho, X>/tau) rho`.
pub fn replicator_density(rho: &DensityMatrix, x: &HermitianMatrix) -> Result<TangentMatrix> {
    check_dims(rho.dim(), x.dim())?;
    Ok(replicator_unchecked(rho, x))
}

pub(crate) fn replicator_unchecked(rho: &DensityMatrix, x: &HermitianMatrix) -> TangentMatrix {
    let t = tmap_inv_spectral(rho.spectrum(), x);
    let a = inner_unchecked(rho.as_matrix(), x.as_matrix()) / rho.trace_scale();
    // the result is traceless up to rounding; project to make it exact
    project_traceless(&t.axpy(-a, rho.as_hermitian()))
}

/// Riemannian gradient under the BKM metric of a function with Euclidean
/// gradient `euclid_grad`.
pub fn riemannian_grad(rho: &DensityMatrix, euclid_grad: &HermitianMatrix) -> Result<TangentMatrix> {
    replicator_density(rho, euclid_grad)
}

/// Exponential map of the e-connection:
/// `Gamma(Gamma^{-1}(rho) + dGamma^{-1}(rho)[X])`.
pub fn exp_e(rho: &DensityMatrix, x: &TangentMatrix) -> Result<DensityMatrix> {
    let step = dgamma_inv(rho, x)?;
    gamma_tau(&(&*gamma_inv(rho) + &*step), rho.trace_scale())
}

/// Inverse of [`exp_e`]: `dGamma(Gamma^{-1} rho)[Gamma^{-1} mu - Gamma^{-1} rho]`.
pub fn exp_e_inv(rho: &DensityMatrix, mu: &DensityMatrix) -> Result<TangentMatrix> {
    check_dims(rho.dim(), mu.dim())?;
    let diff = &*gamma_inv(mu) - &*gamma_inv(rho);
    Ok(dgamma_at(rho, &diff))
}

/// `exp_rho(X) = Gamma(Gamma^{-1}(rho) + X)`.
pub fn lift_exp_density(rho: &DensityMatrix, x: &TangentMatrix) -> Result<DensityMatrix> {
    check_dims(rho.dim(), x.dim())?;
    gamma_tau(&(&*gamma_inv(rho) + &**x), rho.trace_scale())
}

/// Likelihood matrix `L_rho(D) = exp_rho(-Pi[D])`.
pub fn likelihood_density(rho: &DensityMatrix, d: &HermitianMatrix) -> Result<DensityMatrix> {
    check_dims(rho.dim(), d.dim())?;
    gamma_tau(&(&rho.log() - d), rho.trace_scale())
}

/// Exponential map of the log-Euclidean metric: `exp_m(log_m rho + T_rho[Y])`.
pub fn log_euclidean_exp(rho: &DensityMatrix, y: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_dims(rho.dim(), y.dim())?;
    let z = &rho.log() + &tmap_spectral(rho.spectrum(), y);
    Ok(spectral_decompose(&z)?.map(f64::exp))
}

/// The direction `Y = X - (psi(log_m rho + T_rho[X]) - log tau) rho` for
/// which `log_euclidean_exp(rho, Y) = exp_e(rho, X)`.
pub fn log_euclidean_partner(rho: &DensityMatrix, x: &TangentMatrix) -> Result<HermitianMatrix> {
    check_dims(rho.dim(), x.dim())?;
    let z = &rho.log() + &tmap_spectral(rho.spectrum(), x);
    let shift = psi(&z)? - rho.trace_scale().ln();
    Ok(x.as_hermitian().axpy(-shift, rho.as_hermitian()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(v)
    }

    fn softmax(v: &[f64]) -> Vec<f64> {
        let e: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn gamma_of_zero_is_barycenter() {
        let rho = gamma(&HermitianMatrix::zeros(3)).unwrap();
        assert!(rho.as_hermitian().distance(&diag(&[1.0 / 3.0; 3])) < 1e-15);
    }

    #[test]
    fn gamma_of_diagonal_is_softmax() {
        let v = [0.3, -1.2, 2.0, 0.0];
        let rho = gamma(&diag(&v)).unwrap();
        assert!(rho.as_hermitian().distance(&diag(&softmax(&v))) < 1e-15);
    }

    #[test]
    fn gamma_ignores_identity_shift_and_scales_trace() {
        let z = diag(&[0.1, 0.5, -0.4]);
        let a = gamma(&z).unwrap();
        let b = gamma(&(&z + &HermitianMatrix::identity(3).scale(7.5))).unwrap();
        assert!(a.as_hermitian().distance(b.as_hermitian()) < 1e-15);
        let c = gamma_tau(&z, 4.0).unwrap();
        assert!(c.as_hermitian().distance(&a.as_hermitian().scale(4.0)) < 1e-14);
    }

    #[test]
    fn gamma_handles_large_coordinates() {
        let rho = gamma(&diag(&[700.0, -700.0, 0.0]));
        assert!(rho.is_err() || rho.unwrap().as_hermitian().is_finite());
        let rho = gamma(&diag(&[30.0, 0.0])).unwrap();
        assert!(rho.as_hermitian().is_finite());
    }

    #[test]
    fn gamma_inv_of_diagonal() {
        let p = [0.2, 0.3, 0.5];
        let rho = DensityMatrix::new(diag(&p)).unwrap();
        let logs: Vec<f64> = p.iter().map(|x: &f64| x.ln()).collect();
        let mean = logs.iter().sum::<f64>() / 3.0;
        let expected: Vec<f64> = logs.iter().map(|l| l - mean).collect();
        assert!(gamma_inv(&rho).distance(&diag(&expected)) < 1e-15);
        assert!(gamma_inv(&DensityMatrix::maximally_mixed(3, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn dgamma_at_origin() {
        let y = project_traceless(&diag(&[1.0, -0.25, 0.5]));
        let d = dgamma(&TangentMatrix::zeros(3), &y, 1.0).unwrap();
        assert!(d.distance(&y.scale(1.0 / 3.0)) < 1e-15);
    }

    #[test]
    fn replicator_of_identity_vanishes() {
        let rho = DensityMatrix::new(diag(&[0.1, 0.2, 0.7])).unwrap();
        assert!(replicator_density(&rho, &HermitianMatrix::identity(3)).unwrap().norm() < 1e-15);
        let rho = DensityMatrix::with_trace(diag(&[0.5, 1.0, 1.5]), 3.0).unwrap();
        assert!(replicator_density(&rho, &HermitianMatrix::identity(3)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn replicator_at_barycenter() {
        let rho = DensityMatrix::maximally_mixed(4, 1.0);
        let x = project_traceless(&diag(&[1.0, 2.0, -0.5, 0.0]));
        let r = replicator_density(&rho, &x).unwrap();
        assert!(r.distance(&x.scale(0.25)) < 1e-15);
    }

    #[test]
    fn zero_steps_are_identities() {
        let rho = DensityMatrix::new(diag(&[0.15, 0.25, 0.6])).unwrap();
        let z = TangentMatrix::zeros(3);
        assert!(exp_e(&rho, &z).unwrap().as_hermitian().distance(rho.as_hermitian()) < 1e-14);
        assert!(lift_exp_density(&rho, &z).unwrap().as_hermitian().distance(rho.as_hermitian()) < 1e-14);
        assert!(exp_e_inv(&rho, &rho).unwrap().norm() < 1e-15);
        let le = log_euclidean_exp(&rho, &HermitianMatrix::zeros(3)).unwrap();
        assert!(le.distance(rho.as_hermitian()) < 1e-14);
    }

    #[test]
    fn lift_from_barycenter_is_gamma() {
        let x = project_traceless(&diag(&[0.4, -0.1, 1.3]));
        let a = lift_exp_density(&DensityMatrix::maximally_mixed(3, 1.0), &x).unwrap();
        let b = gamma(&x).unwrap();
        assert!(a.as_hermitian().distance(b.as_hermitian()) < 1e-15);
    }

    #[test]
    fn gamma_of_far_coordinates_is_a_state_below_the_floor() {
        let rho = gamma(&diag(&[20.0, -20.0])).unwrap();
        assert!(rho.eigenvalues()[0] < 1e-14 && rho.eigenvalues()[0] > 0.0);
        assert!((rho.as_hermitian().trace() - 1.0).abs() < 1e-15);
        assert!(gamma(&diag(&[400.0, -400.0])).is_err());
        assert!(DensityMatrix::new(rho.as_hermitian().clone()).is_err());
    }

    #[test]
    fn psi_is_log_sum_exp() {
        let v = [1.0, 2.0, 3.0];
        let expected = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((psi(&diag(&v)).unwrap() - expected).abs() < 1e-14);
        assert!((psi(&diag(&[800.0, 800.0])).unwrap() - (800.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn likelihood_at_barycenter_with_zero_data() {
        let u = DensityMatrix::maximally_mixed(2, 1.0);
        let l = likelihood_density(&u, &HermitianMatrix::zeros(2)).unwrap();
        assert!(l.as_hermitian().distance(u.as_hermitian()) < 1e-15);
    }
}
