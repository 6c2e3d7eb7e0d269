//! Encoders from data to Hermitian matrices or density matrices, and the
//! matching decoders.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsafError, Result};
use crate::graph::WeightedGraph;
use crate::hermitian::{CMatrix, DensityMatrix, HermitianMatrix};

/// Bloch vectors are shrunk to at most this norm before encoding.
pub const BLOCH_MAX_NORM: f64 = 1.0 - 1e-6;

/// Decoders reject states whose purity gap exceeds this multiple of the
/// purity tolerance.
pub const DECODE_GAP_FACTOR: f64 = 10.0;

const NORM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-12;

/// A real 3-vector in the closed unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub fn new(d: [f64; 3]) -> Result<Self> {
        if d.iter().any(|x| !x.is_finite()) {
            return Err(QsafError::NonFinite { iteration: None });
        }
        let v = Self(d);
        if v.norm() > 1.0 + NORM_TOL {
            return Err(QsafError::InvalidArgument(format!(
                "Bloch vector has norm {} > 1",
                v.norm()
            )));
        }
        Ok(v)
    }

    /// Scales `d` radially into the ball of radius `radius` if it lies outside.
    pub fn clamped(d: [f64; 3], radius: f64) -> Self {
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if n > radius {
            let s = radius / n;
            Self([d[0] * s, d[1] * s, d[2] * s])
        } else {
            Self(d)
        }
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `rho = (I + d_1 sigma_x + d_2 sigma_y + d_3 sigma_z) / 2`, after shrinking
/// `d` to norm at most [`BLOCH_MAX_NORM`].
pub fn bloch_encode(d: &BlochVector) -> Result<DensityMatrix> {
    let [x, y, z] = BlochVector::clamped(d.0, BLOCH_MAX_NORM).0;
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.5 * (1.0 + z), 0.0),
            Complex64::new(0.5 * x, -0.5 * y),
            Complex64::new(0.5 * x, 0.5 * y),
            Complex64::new(0.5 * (1.0 - z), 0.0),
        ],
    );
    DensityMatrix::new(HermitianMatrix::new(m)?)
}

/// `d_k = tr(rho sigma_k)` of the unit-trace state `rho / tau`.
pub fn bloch_decode(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(QsafError::DimensionMismatch {
            expected: 2,
            found: rho.dim(),
        });
    }
    let m = rho.as_matrix();
    let s = 1.0 / rho.trace_scale();
    let off = m[(1, 0)] * s;
    Ok(BlochVector([
        2.0 * off.re,
        2.0 * off.im,
        (m[(0, 0)].re - m[(1, 1)].re) * s,
    ]))
}

/// Maps an 8-bit RGB color to `2 rgb - 1`, clamped radially into the ball
/// of radius [`BLOCH_MAX_NORM`].
pub fn rgb_to_bloch(rgb: [u8; 3]) -> BlochVector {
    let d = rgb.map(|v| 2.0 * f64::from(v) / 255.0 - 1.0);
    BlochVector::clamped(d, BLOCH_MAX_NORM)
}

/// `(d + 1) / 2` rounded to 8 bits.
pub fn bloch_to_rgb(d: &BlochVector) -> [u8; 3] {
    d.0.map(|x| ((x + 1.0) * 0.5 * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// A square `s x s` patch stored without its mean and with unit Frobenius
/// norm, together with the removed mean and norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    size: usize,
    values: Vec<f64>,
    mean: f64,
    norm: f64,
}

impl Patch {
    /// Normalizes raw row-major values.
    pub fn from_values(size: usize, raw: &[f64]) -> Result<Self> {
        if size == 0 {
            return Err(QsafError::InvalidArgument("patch size must be positive".into()));
        }
        if raw.len() != size * size {
            return Err(QsafError::DimensionMismatch {
                expected: size * size,
                found: raw.len(),
            });
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(QsafError::NonFinite { iteration: None });
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let centered: Vec<f64> = raw.iter().map(|x| x - mean).collect();
        let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
        let values = if norm > 0.0 {
            centered.into_iter().map(|x| x / norm).collect()
        } else {
            vec![0.0; raw.len()]
        };
        Ok(Self {
            size,
            values,
            mean,
            norm,
        })
    }

    /// Wraps already normalized values with a stored mean and norm.
    pub fn from_normalized(size: usize, values: Vec<f64>, mean: f64, norm: f64) -> Result<Self> {
        if values.len() != size * size {
            return Err(QsafError::DimensionMismatch {
                expected: size * size,
                found: values.len(),
            });
        }
        Ok(Self {
            size,
            values,
            mean,
            norm,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Zero-mean, unit-norm values (all zero for a constant patch).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// A constant patch has nothing to encode.
    pub fn is_degenerate(&self) -> bool {
        self.norm <= 0.0
    }

    /// `norm * values + mean`.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.norm + self.mean).collect()
    }

    /// Frobenius distance between the normalized forms.
    pub fn distance(&self, other: &Patch) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// `D = -v v^T` for the normalized patch vector `v`.
pub fn patch_rank_one_encode(p: &Patch) -> Result<HermitianMatrix> {
    if p.is_degenerate() {
        return Err(QsafError::InvalidArgument("cannot encode a constant patch".into()));
    }
    let v: Vec<Complex64> = p.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Ok(-&HermitianMatrix::outer(&v))
}

/// `(1 - delta) v v* / |v|^2 + delta I / c`.
pub fn near_pure_state(v: &[Complex64], delta: f64) -> Result<DensityMatrix> {
    let n2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if !(n2 > 0.0) {
        return Err(QsafError::InvalidArgument("zero vector".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(QsafError::InvalidArgument(format!("mixing weight {delta} outside (0, 1]")));
    }
    let c = v.len();
    let pure = HermitianMatrix::outer(v).scale((1.0 - delta) / n2);
    let mixed = HermitianMatrix::identity(c).scale(delta / c as f64);
    DensityMatrix::new(&pure + &mixed)
}

fn check_near_pure(mu: &DensityMatrix, purity_tol: f64) -> Result<()> {
    let gap = mu.normalized().purity_gap();
    if gap > DECODE_GAP_FACTOR * purity_tol {
        return Err(QsafError::InvalidArgument(format!(
            "state is not close to pure (purity gap {gap:e})"
        )));
    }
    Ok(())
}

/// Dominant eigenvector with its global phase chosen so that the largest
/// entry is real and positive.
fn dominant_real_phase(mu: &DensityMatrix) -> Vec<Complex64> {
    let v = mu.dominant_eigenvector();
    let pivot = v
        .iter()
        .copied()
        .fold(Complex64::new(0.0, 0.0), |a, z| if z.norm() > a.norm() { z } else { a });
    if pivot.norm() == 0.0 {
        return v;
    }
    let phase = pivot.conj() / pivot.norm();
    v.into_iter().map(|z| z * phase).collect()
}

/// Reads a patch off the dominant eigenvector of a near-pure state; the
/// global sign is the one closer to `reference`, whose mean and norm are
/// carried over.
pub fn patch_rank_one_decode(mu: &DensityMatrix, reference: &Patch, purity_tol: f64) -> Result<Patch> {
    let n = reference.size * reference.size;
    if mu.dim() != n {
        return Err(QsafError::DimensionMismatch {
            expected: n,
            found: mu.dim(),
        });
    }
    check_near_pure(mu, purity_tol)?;
    let w: Vec<f64> = dominant_real_phase(mu).iter().map(|z| z.re).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let w: Vec<f64> = w.into_iter().map(|x| x / norm).collect();
    let dot: f64 = w.iter().zip(&reference.values).map(|(a, b)| a * b).sum();
    // |w - r|^2 = 2 - 2<w, r> for unit vectors
    let sign = if dot < 0.0 { -1.0 } else { 1.0 };
    Patch::from_normalized(
        reference.size,
        w.into_iter().map(|x| sign * x).collect(),
        reference.mean,
        reference.norm,
    )
}

/// Unitary two-dimensional DFT matrix `F (x) F` acting on row-major
/// vectorized `s x s` arrays, with `F_jk = exp(-2 pi i jk / s) / sqrt(s)`.
pub fn dft2_matrix(s: usize) -> CMatrix {
    let scale = 1.0 / s as f64;
    let f = |a: usize, b: usize| Complex64::from_polar(1.0, -2.0 * PI * ((a * b) % s) as f64 / s as f64);
    CMatrix::from_fn(s * s, s * s, |r, c| {
        let (r1, r2) = (r / s, r % s);
        let (c1, c2) = (c / s, c % s);
        f(r1, c1) * f(r2, c2) * scale
    })
}

fn patch_spectrum(p: &Patch, f2: &CMatrix) -> Vec<Complex64> {
    let v = nalgebra::DVector::from_iterator(p.values.len(), p.values.iter().map(|&x| Complex64::new(x, 0.0)));
    (f2 * v).iter().copied().collect()
}

/// `D = F_2 Diag(-|p_hat|^2) F_2*` with `p_hat = F_2 vec(P)`.
pub fn fourier_frame_encode(p: &Patch) -> Result<HermitianMatrix> {
    let f2 = dft2_matrix(p.size);
    let spec = patch_spectrum(p, &f2);
    let mut scaled = f2.clone();
    for (k, z) in spec.iter().enumerate() {
        scaled.column_mut(k).scale_mut(-z.norm_sqr());
    }
    HermitianMatrix::hermitian_part(&(scaled * f2.adjoint()))
}

/// The pure state whose Fourier magnitudes are those of `p`:
/// `w = F_2 |p_hat| / |p_hat|`, mixed with weight `delta`.
pub fn fourier_frame_state(p: &Patch, delta: f64) -> Result<DensityMatrix> {
    if p.is_degenerate() {
        return Err(QsafError::InvalidArgument("cannot encode a constant patch".into()));
    }
    let f2 = dft2_matrix(p.size);
    let mags = nalgebra::DVector::from_iterator(
        p.values.len(),
        patch_spectrum(p, &f2).iter().map(|z| Complex64::new(z.norm(), 0.0)),
    );
    let w: Vec<Complex64> = (&f2 * mags).iter().copied().collect();
    near_pure_state(&w, delta)
}

/// Uses the Fourier magnitudes of the dominant eigenvector of `mu` as a
/// filter on the spectrum of `original` (keeping its phase), transforms back,
/// and restores the original mean and norm.
pub fn fourier_frame_decode(mu: &DensityMatrix, original: &Patch, purity_tol: f64) -> Result<Patch> {
    let s = original.size;
    if mu.dim() != s * s {
        return Err(QsafError::DimensionMismatch {
            expected: s * s,
            found: mu.dim(),
        });
    }
    check_near_pure(mu, purity_tol)?;
    let f2 = dft2_matrix(s);
    let w = nalgebra::DVector::from_vec(mu.dominant_eigenvector());
    let w_tilde = f2.adjoint() * w;
    let p_hat = patch_spectrum(original, &f2);
    let q_hat = nalgebra::DVector::from_iterator(
        s * s,
        w_tilde.iter().zip(&p_hat).map(|(wk, pk)| {
            let phase = if pk.norm() > 0.0 { pk / pk.norm() } else { Complex64::new(1.0, 0.0) };
            phase * wk.norm()
        }),
    );
    let q: Vec<f64> = (f2.adjoint() * q_hat).iter().map(|z| z.re).collect();
    let mean = q.iter().sum::<f64>() / q.len() as f64;
    let centered: Vec<f64> = q.iter().map(|x| x - mean).collect();
    let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
    let values = if norm > 0.0 {
        centered.into_iter().map(|x| x / norm).collect()
    } else {
        centered
    };
    Patch::from_normalized(s, values, original.mean, original.norm)
}

/// `D_i = U Diag(lambda_i) U*` for a unitary `U`.
pub fn commuting_dataset(u: &CMatrix, lambdas: &[Vec<f64>]) -> Result<Vec<HermitianMatrix>> {
    let c = u.nrows();
    if u.ncols() != c {
        return Err(QsafError::NotSquare {
            rows: c,
            cols: u.ncols(),
        });
    }
    let defect = (u.adjoint() * u - CMatrix::identity(c, c)).norm();
    if !(defect <= UNITARY_TOL) {
        return Err(QsafError::InvalidArgument(format!(
            "basis is not unitary (|U*U - I|_F = {defect:e})"
        )));
    }
    lambdas
        .iter()
        .map(|l| {
            if l.len() != c {
                return Err(QsafError::DimensionMismatch {
                    expected: c,
                    found: l.len(),
                });
            }
            Ok(HermitianMatrix::from_real_diagonal(l).conjugate_by(u))
        })
        .collect()
}

/// Weights `exp(-tau_w |P_i - P_k|^2)` over the given neighborhoods,
/// row-normalized.
pub fn gaussian_patch_weights(patches: &[Patch], neighborhoods: Vec<Vec<usize>>, tau_w: f64) -> Result<WeightedGraph> {
    if !(tau_w >= 0.0 && tau_w.is_finite()) {
        return Err(QsafError::InvalidArgument(format!(
            "weight scale must be nonnegative, got {tau_w}"
        )));
    }
    if neighborhoods.len() != patches.len() {
        return Err(QsafError::DimensionMismatch {
            expected: patches.len(),
            found: neighborhoods.len(),
        });
    }
    let mut raw = Vec::with_capacity(patches.len());
    for (i, nbrs) in neighborhoods.iter().enumerate() {
        let mut row = Vec::with_capacity(nbrs.len());
        for &k in nbrs {
            let p = patches.get(k).ok_or_else(|| {
                QsafError::InvalidArgument(format!("neighbor {k} of vertex {i} is out of range"))
            })?;
            row.push((-tau_w * patches[i].distance(p).powi(2)).exp());
        }
        raw.push(row);
    }
    WeightedGraph::from_raw_weights(neighborhoods, raw)
}

/// `{i}` followed by the `k` patches closest to patch `i`, ties broken by
/// index.
pub fn knn_neighborhoods(patches: &[Patch], k: usize) -> Vec<Vec<usize>> {
    let n = patches.len();
    (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (patches[i].distance(&patches[j]), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut nbrs = vec![i];
            nbrs.extend(others.into_iter().take(k).map(|(_, j)| j));
            nbrs
        })
        .collect()
}
