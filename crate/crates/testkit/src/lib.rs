//! Random instance generators and reference computations for tests.
//!
//! The reference routines deliberately avoid the code paths of `qsaf`:
//! exponentials use Taylor series with scaling and squaring, logarithms use
//! inverse scaling and squaring, and the integral forms of the BKM operators
//! are evaluated by Gauss-Legendre quadrature.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qsaf::{CMatrix, DensityMatrix, HermitianMatrix, TangentMatrix, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cgauss<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_complex<R: Rng>(rng: &mut R, c: usize) -> CMatrix {
    CMatrix::from_fn(c, c, |_, _| cgauss(rng))
}

/// `(G + G*) / 2` scaled to Frobenius norm `norm`.
pub fn random_hermitian<R: Rng>(rng: &mut R, c: usize, norm: f64) -> HermitianMatrix {
    let g = random_complex(rng, c);
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let n = h.norm();
    HermitianMatrix::new(h * Complex64::new(norm / n, 0.0)).unwrap()
}

pub fn random_traceless<R: Rng>(rng: &mut R, c: usize, norm: f64) -> TangentMatrix {
    let h = qsaf::hermitian::project_traceless(&random_hermitian(rng, c, 1.0));
    let n = h.norm();
    h.scale(norm / n)
}

/// Real symmetric matrix embedded as Hermitian.
pub fn random_real_symmetric<R: Rng>(rng: &mut R, c: usize, norm: f64) -> HermitianMatrix {
    let g = DMatrix::<f64>::from_fn(c, c, |_, _| rng.sample(StandardNormal));
    let s = (&g + g.transpose()) * 0.5;
    let n = s.norm();
    HermitianMatrix::from_real(&(s / n * norm)).unwrap()
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, c: usize) -> CMatrix {
    let qr = random_complex(rng, c).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..c {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// Unit-trace density matrix with eigenvalues drawn from a Dirichlet-like
/// law and bounded below by `floor / c`, in a random basis.
pub fn random_density<R: Rng>(rng: &mut R, c: usize, floor: f64) -> DensityMatrix {
    let raw: Vec<f64> = (0..c).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = raw.iter().sum();
    let lambda: Vec<f64> = raw.iter().map(|x| (1.0 - floor) * x / s + floor / c as f64).collect();
    let u = random_unitary(rng, c);
    let m = &u * CMatrix::from_diagonal(&DVector::from_iterator(c, lambda.iter().map(|&l| Complex64::new(l, 0.0))))
        * u.adjoint();
    DensityMatrix::from_matrix(&m, 1.0).unwrap()
}

/// Random symmetric graph on `n` vertices: a ring plus random chords.
pub fn random_symmetric_graph<R: Rng>(rng: &mut R, n: usize) -> WeightedGraph {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    for _ in 0..n {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        edges.push((a, b));
    }
    WeightedGraph::symmetric_from_edges(n, &edges).unwrap()
}

/// Random graph with random positive row-normalized weights.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, degree: usize) -> WeightedGraph {
    let mut nbrs = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![i];
        while v.len() < (degree + 1).min(n) {
            let k = rng.random_range(0..n);
            if !v.contains(&k) {
                v.push(k);
            }
        }
        raw.push(v.iter().map(|_| rng.random_range(0.1..1.0)).collect());
        nbrs.push(v);
    }
    WeightedGraph::from_raw_weights(nbrs, raw).unwrap()
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `int_a^b f` by composite Gauss-Legendre over `panels` equal panels.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, nodes: usize, panels: usize) -> f64 {
    let rule = gauss_legendre(nodes);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in &rule {
            acc += w * h * f(lo + x * h);
        }
    }
    acc
}

/// Matrix exponential by Taylor series with scaling and squaring.
pub fn expm_taylor(a: &CMatrix) -> CMatrix {
    let c = a.nrows();
    let norm = a.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * Complex64::new(0.5f64.powi(squarings), 0.0);
    let mut term = CMatrix::identity(c, c);
    let mut sum = CMatrix::identity(c, c);
    for k in 1..=30 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Principal square root by the Denman-Beavers iteration.
pub fn sqrtm_db(a: &CMatrix) -> CMatrix {
    let c = a.nrows();
    let mut y = a.clone();
    let mut z = CMatrix::identity(c, c);
    let half = Complex64::new(0.5, 0.0);
    for _ in 0..100 {
        let yi = y.clone().try_inverse().expect("invertible");
        let zi = z.clone().try_inverse().expect("invertible");
        let y_next = (&y + zi) * half;
        let z_next = (&z + yi) * half;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm() {
            break;
        }
    }
    y
}

/// Principal logarithm of a positive definite matrix by inverse scaling and
/// squaring: repeated square roots, then the series of `log(I + X)`.
pub fn logm_iss(a: &CMatrix) -> CMatrix {
    let c = a.nrows();
    let id = CMatrix::identity(c, c);
    let mut r = a.clone();
    let mut k = 0;
    while (&r - &id).norm() > 0.05 {
        r = sqrtm_db(&r);
        k += 1;
    }
    let x = &r - &id;
    let mut term = id.clone();
    let mut sum = CMatrix::zeros(c, c);
    for j in 1..=40 {
        term = &term * &x;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += &term * Complex64::new(sign / j as f64, 0.0);
    }
    sum * Complex64::new(2f64.powi(k), 0.0)
}

/// `f(A)` for a Hermitian `A` through nalgebra's eigensolver.
pub fn hermitian_fn<F: Fn(f64) -> f64>(a: &CMatrix, f: F) -> CMatrix {
    let eig = a.clone().symmetric_eigen();
    let c = a.nrows();
    let d = CMatrix::from_diagonal(&DVector::from_iterator(
        c,
        eig.eigenvalues.iter().map(|&l| Complex64::new(f(l), 0.0)),
    ));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// `int_0^1 x^(1-s) y^s ds` by 64-node Gauss-Legendre.
pub fn log_mean_quadrature(x: f64, y: f64) -> f64 {
    integrate(|s| x.powf(1.0 - s) * y.powf(s), 0.0, 1.0, 64, 1)
}

/// `int_0^1 rho^(1-s) X rho^s ds` by `nodes`-point Gauss-Legendre.
pub fn tmap_inv_quadrature(rho: &CMatrix, x: &CMatrix, nodes: usize) -> CMatrix {
    let c = rho.nrows();
    let mut acc = CMatrix::zeros(c, c);
    for (s, w) in gauss_legendre(nodes) {
        let a = hermitian_fn(rho, |l| l.powf(1.0 - s));
        let b = hermitian_fn(rho, |l| l.powf(s));
        acc += (a * x * b) * Complex64::new(w, 0.0);
    }
    acc
}

/// `int_0^inf tr(X (rho + l)^-1 Y (rho + l)^-1) dl` after the substitution
/// `l = t / (1 - t)`, on geometrically refined panels towards `t = 0`.
pub fn bkm_quadrature(rho: &CMatrix, x: &CMatrix, y: &CMatrix) -> f64 {
    let c = rho.nrows();
    let id = CMatrix::identity(c, c);
    let integrand = |t: f64| {
        let l = t / (1.0 - t);
        let r = (rho + &id * Complex64::new(l, 0.0)).try_inverse().expect("invertible");
        let tr = (x * &r * y * &r).trace().re;
        tr / ((1.0 - t) * (1.0 - t))
    };
    // panels [0, 1e-12], ..., [1e-2, 1e-1], [1e-1, 1]
    let mut edges = vec![0.0];
    edges.extend((1..=12).rev().map(|k| 10f64.powi(-k)));
    edges.push(1.0);
    edges
        .windows(2)
        .map(|w| integrate(integrand, w[0], w[1], 32, 4))
        .sum()
}

/// One classical RK4 step for `y' = f(y)`.
pub fn rk4_step<F: Fn(&[f64]) -> Vec<f64>>(f: &F, y: &[f64], h: f64) -> Vec<f64> {
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let k1 = f(y);
    let k2 = f(&add(y, &k1, 0.5 * h));
    let k3 = f(&add(y, &k2, 0.5 * h));
    let k4 = f(&add(y, &k3, h));
    y.iter()
        .enumerate()
        .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates `y' = f(y)` with `steps` RK4 steps of size `h`.
pub fn rk4<F: Fn(&[f64]) -> Vec<f64>>(f: F, y0: &[f64], h: f64, steps: usize) -> Vec<f64> {
    let mut y = y0.to_vec();
    for _ in 0..steps {
        y = rk4_step(&f, &y, h);
    }
    y
}

/// Central difference `(f(h) - f(-h)) / 2h` of a matrix-valued curve.
pub fn central_difference<F: Fn(f64) -> CMatrix>(f: F, h: f64) -> CMatrix {
    (f(h) - f(-h)) * Complex64::new(0.5 / h, 0.0)
}

/// Central difference of a scalar curve.
pub fn central_difference_scalar<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// `|A - B|_F / max(|B|_F, floor)`.
pub fn rel_error(a: &CMatrix, b: &CMatrix, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

/// `sum_ij A_ij conj(B_ij)`, real part.
pub fn entrywise_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

pub fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `U Diag(v) U*`.
pub fn embed_diagonal(u: &CMatrix, v: &[f64]) -> CMatrix {
    let d = CMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0))));
    u * d * u.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_polynomials() {
        let v = integrate(|x| x.powi(9), 0.0, 1.0, 8, 1);
        assert!((v - 0.1).abs() < 1e-15);
        let w: f64 = gauss_legendre(64).iter().map(|p| p.1).sum();
        assert!((w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn taylor_exp_of_diagonal() {
        let a = CMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(3.0, 0.0), Complex64::new(-1.0, 0.0)]));
        let e = expm_taylor(&a);
        assert!((e[(0, 0)].re - 3f64.exp()).abs() < 1e-12 * 3f64.exp());
        assert!((e[(1, 1)].re - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn iss_log_inverts_taylor_exp() {
        let mut r = rng(1);
        let h = random_hermitian(&mut r, 4, 2.0);
        let back = logm_iss(&expm_taylor(h.as_matrix()));
        assert!((back - h.as_matrix()).norm() < 1e-11);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut r = rng(2);
        let u = random_unitary(&mut r, 5);
        assert!((u.adjoint() * &u - CMatrix::identity(5, 5)).norm() < 1e-13);
    }

    #[test]
    fn rk4_exponential_decay() {
        let y = rk4(|y| vec![-y[0]], &[1.0], 1e-3, 1000);
        assert!((y[0] - (-1f64).exp()).abs() < 1e-12);
    }
}
