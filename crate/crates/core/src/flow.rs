//! The coupled density-matrix flow on a weighted graph and its geometric
//! integrator.
//!
//! The state `mu` is advanced in traceless coordinates `A` with
//! `mu_i = Gamma_tau(A_i)`:
//!
//! ```text
//! A_{t+1,i} = A_{t,i} + eps * Pi[(Omega[mu_t])_i]
//! ```
//!
//! Vertices are updated in parallel within a step; each update only reads the
//! previous state, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QsafError, Result};
use crate::graph::WeightedGraph;
use crate::hermitian::{
    hermitize, inner_unchecked, project_traceless, DensityMatrix, HermitianMatrix, TangentMatrix,
};
use crate::manifold::{gamma_inv, gamma_tau, replicator_unchecked};

/// Upper bound on the step size accepted by [`FlowConfig::validate`].
pub const MAX_STEP_SIZE: f64 = 0.5;

/// Ratio between the stationarity threshold on `|d rho/dt|_F` and the purity
/// tolerance of the single-vertex flow.
const STATIONARY_FACTOR: f64 = 1e-3;

/// Integration parameters shared by all flows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub step_size: f64,
    pub purity_tol: f64,
    pub max_iters: usize,
    pub record_every: usize,
    pub trace_scale: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            purity_tol: 1e-3,
            max_iters: 10_000,
            record_every: 10,
            trace_scale: 1.0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size <= MAX_STEP_SIZE) {
            return Err(QsafError::InvalidArgument(format!(
                "step size must lie in (0, {MAX_STEP_SIZE}], got {}",
                self.step_size
            )));
        }
        if !(self.purity_tol > 0.0 && self.purity_tol.is_finite()) {
            return Err(QsafError::InvalidArgument(format!(
                "purity tolerance must be positive, got {}",
                self.purity_tol
            )));
        }
        if self.max_iters == 0 || self.record_every == 0 {
            return Err(QsafError::InvalidArgument(
                "max_iters and record_every must be positive".into(),
            ));
        }
        if !(self.trace_scale > 0.0 && self.trace_scale.is_finite()) {
            return Err(QsafError::InvalidArgument(format!(
                "trace scale must be positive, got {}",
                self.trace_scale
            )));
        }
        Ok(())
    }
}

pub(crate) fn record_due(iteration: usize, every: usize) -> bool {
    every > 0 && iteration % every == 0
}

/// One density matrix per vertex, all of the same dimension and trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    states: Vec<DensityMatrix>,
}

impl ProductState {
    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(QsafError::InvalidArgument("product state has no factors".into()));
        };
        let (c, tau) = (first.dim(), first.trace_scale());
        for s in &states {
            if s.dim() != c {
                return Err(QsafError::DimensionMismatch {
                    expected: c,
                    found: s.dim(),
                });
            }
            if s.trace_scale() != tau {
                return Err(QsafError::TraceMismatch {
                    trace: s.trace_scale(),
                    expected: tau,
                });
            }
        }
        Ok(Self { states })
    }

    /// `tau I / c` at every vertex.
    pub fn barycenter(n: usize, c: usize, tau: f64) -> Self {
        Self {
            states: vec![DensityMatrix::maximally_mixed(c, tau); n],
        }
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn into_states(self) -> Vec<DensityMatrix> {
        self.states
    }

    pub fn state(&self, i: usize) -> &DensityMatrix {
        &self.states[i]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn trace_scale(&self) -> f64 {
        self.states[0].trace_scale()
    }

    pub fn matrices(&self) -> Vec<HermitianMatrix> {
        self.states.iter().map(|s| s.as_hermitian().clone()).collect()
    }

    pub fn max_purity_gap(&self) -> f64 {
        self.states.iter().map(DensityMatrix::purity_gap).fold(0.0, f64::max)
    }

    /// Largest per-vertex Frobenius distance to `other`.
    pub fn max_distance(&self, other: &ProductState) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.as_hermitian().distance(b.as_hermitian()))
            .fold(0.0, f64::max))
    }
}

/// Traceless coordinates `A_i` of a product state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateState {
    coords: Vec<TangentMatrix>,
}

impl CoordinateState {
    pub fn new(coords: Vec<TangentMatrix>) -> Result<Self> {
        let Some(first) = coords.first() else {
            return Err(QsafError::InvalidArgument("coordinate state is empty".into()));
        };
        let c = first.dim();
        if let Some(a) = coords.iter().find(|a| a.dim() != c) {
            return Err(QsafError::DimensionMismatch {
                expected: c,
                found: a.dim(),
            });
        }
        Ok(Self { coords })
    }

    /// `A_i = Gamma^{-1}(mu_i)`.
    pub fn of(mu: &ProductState) -> Self {
        Self {
            coords: mu.states.iter().map(gamma_inv).collect(),
        }
    }

    pub fn coords(&self) -> &[TangentMatrix] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// `mu_i = Gamma_tau(A_i)`.
    pub fn to_product(&self, tau: f64) -> Result<ProductState> {
        let states = self
            .coords
            .par_iter()
            .map(|a| gamma_tau(a, tau))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductState { states })
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(QsafError::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_data(g: &WeightedGraph, c: usize, d: &[HermitianMatrix]) -> Result<()> {
    check_len(g.vertex_count(), d.len())?;
    if let Some(m) = d.iter().find(|m| m.dim() != c) {
        return Err(QsafError::DimensionMismatch {
            expected: c,
            found: m.dim(),
        });
    }
    Ok(())
}

fn weighted_sum<'a, F>(g: &WeightedGraph, i: usize, c: usize, term: F) -> HermitianMatrix
where
    F: Fn(usize) -> &'a HermitianMatrix,
{
    let mut acc = HermitianMatrix::zeros(c).into_matrix();
    for (k, w) in g.neighbors(i) {
        acc.zip_apply(term(k).as_matrix(), |a, b| *a += b * w);
    }
    HermitianMatrix::from_hermitian_unchecked(hermitize(&acc))
}

/// `Omega[M]_i = sum_k w_ik M_k`, Hermitized.
pub fn omega_apply(g: &WeightedGraph, m: &[HermitianMatrix]) -> Result<Vec<HermitianMatrix>> {
    let c = m.first().map_or(0, HermitianMatrix::dim);
    check_data(g, c, m)?;
    Ok(omega_unchecked(g, m, c))
}

fn omega_unchecked(g: &WeightedGraph, m: &[HermitianMatrix], c: usize) -> Vec<HermitianMatrix> {
    (0..g.vertex_count())
        .into_par_iter()
        .map(|i| weighted_sum(g, i, c, |k| &m[k]))
        .collect()
}

fn omega_of_states(g: &WeightedGraph, mu: &ProductState) -> Vec<HermitianMatrix> {
    let c = mu.dim();
    (0..g.vertex_count())
        .into_par_iter()
        .map(|i| weighted_sum(g, i, c, |k| mu.states[k].as_hermitian()))
        .collect()
}

/// Similarity map `S_i(rho) = Gamma(sum_k w_ik (log_m rho_k - D_k))`.
pub fn similarity_density(g: &WeightedGraph, rho: &ProductState, d: &[HermitianMatrix]) -> Result<ProductState> {
    check_len(g.vertex_count(), rho.len())?;
    check_data(g, rho.dim(), d)?;
    let logs: Vec<HermitianMatrix> = rho
        .states
        .par_iter()
        .zip(d)
        .map(|(r, dk)| &r.log() - dk)
        .collect();
    let tau = rho.trace_scale();
    let states = omega_unchecked(g, &logs, rho.dim())
        .par_iter()
        .map(|z| gamma_tau(z, tau))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProductState { states })
}

/// The QSAF field `R_{rho_i}[S_i(rho)]` at every vertex.
pub fn qsaf_vector_field(g: &WeightedGraph, rho: &ProductState, d: &[HermitianMatrix]) -> Result<Vec<TangentMatrix>> {
    let s = similarity_density(g, rho, d)?;
    Ok(rho
        .states
        .par_iter()
        .zip(&s.states)
        .map(|(r, si)| replicator_unchecked(r, si.as_hermitian()))
        .collect())
}

/// The S-flow field `R_{mu_i}[Omega[mu]_i]` at every vertex.
pub fn mu_flow_field(g: &WeightedGraph, mu: &ProductState) -> Result<Vec<TangentMatrix>> {
    check_len(g.vertex_count(), mu.len())?;
    let om = omega_of_states(g, mu);
    Ok(mu
        .states
        .par_iter()
        .zip(&om)
        .map(|(m, o)| replicator_unchecked(m, o))
        .collect())
}

/// Coordinates of `S(1)`, the similarity map at the barycenter:
/// `A_i = Pi[sum_k w_ik (-D_k)]`.
pub fn initial_coordinates(g: &WeightedGraph, d: &[HermitianMatrix]) -> Result<CoordinateState> {
    let c = d.first().map_or(0, HermitianMatrix::dim);
    check_data(g, c, d)?;
    let neg: Vec<HermitianMatrix> = d.iter().map(|m| -m).collect();
    Ok(CoordinateState {
        coords: omega_unchecked(g, &neg, c).iter().map(project_traceless).collect(),
    })
}

/// `J(mu) = -1/2 <mu, Omega[mu]>`.
pub fn potential(g: &WeightedGraph, mu: &ProductState) -> Result<f64> {
    check_len(g.vertex_count(), mu.len())?;
    Ok(potential_with(mu, &omega_of_states(g, mu)))
}

fn potential_with(mu: &ProductState, om: &[HermitianMatrix]) -> f64 {
    -0.5 * mu
        .states
        .iter()
        .zip(om)
        .map(|(m, o)| inner_unchecked(m.as_matrix(), o.as_matrix()))
        .sum::<f64>()
}

/// `1/4 sum_ij w_ij |mu_i - mu_j|^2 - 1/2 |mu|^2`; equal to [`potential`]
/// when the weights are symmetric.
pub fn potential_laplacian(g: &WeightedGraph, mu: &ProductState) -> Result<f64> {
    check_len(g.vertex_count(), mu.len())?;
    let mut dirichlet = 0.0;
    let mut norm_sq = 0.0;
    for i in 0..g.vertex_count() {
        let mi = mu.states[i].as_hermitian();
        norm_sq += mi.norm().powi(2);
        for (k, w) in g.neighbors(i) {
            dirichlet += w * mi.distance(mu.states[k].as_hermitian()).powi(2);
        }
    }
    Ok(0.25 * dirichlet - 0.5 * norm_sq)
}

/// Result of [`sqsaf_integrate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SqsafRun {
    pub trajectory: Vec<(usize, DensityMatrix)>,
    pub final_state: DensityMatrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Integrates the single-vertex flow `rho' = R_rho[L_rho(D)]` from the
/// barycenter in coordinates: `b_{t+1} = b_t + eps Pi[Gamma(b_t - Pi D)]`,
/// `rho_t = Gamma(b_t)`.
///
/// Stops when the purity gap drops below `purity_tol` or the state becomes
/// stationary (`|rho_{t+1} - rho_t|_F / eps <= 1e-3 purity_tol`), which is
/// how a degenerate minimal eigenvalue of `D` ends up.
pub fn sqsaf_integrate(d: &HermitianMatrix, cfg: &FlowConfig) -> Result<SqsafRun> {
    cfg.validate()?;
    if !d.is_finite() {
        return Err(QsafError::NonFinite { iteration: None });
    }
    let c = d.dim();
    let tau = cfg.trace_scale;
    let eps = cfg.step_size;
    let pd = project_traceless(d);
    let mut b = TangentMatrix::zeros(c);
    let mut rho = DensityMatrix::maximally_mixed(c, tau);
    let mut trajectory = vec![(0, rho.clone())];
    let stationary_tol = STATIONARY_FACTOR * cfg.purity_tol;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        if rho.purity_gap() <= cfg.purity_tol {
            converged = true;
            break;
        }
        let t = iterations + 1;
        let wrap = |e| QsafError::StepFailed {
            iteration: t,
            source: Box::new(e),
        };
        let l = gamma_tau(&(&*b - &*pd), tau).map_err(wrap)?;
        b = b.axpy(eps, &project_traceless(l.as_hermitian()));
        if !b.is_finite() {
            return Err(QsafError::NonFinite { iteration: Some(t) });
        }
        let next = gamma_tau(&b, tau).map_err(wrap)?;
        let speed = next.as_hermitian().distance(rho.as_hermitian()) / eps;
        rho = next;
        iterations = t;
        if record_due(t, cfg.record_every) {
            trajectory.push((t, rho.clone()));
        }
        if speed <= stationary_tol {
            converged = true;
            break;
        }
    }
    converged = converged || rho.purity_gap() <= cfg.purity_tol;
    if trajectory.last().map(|(t, _)| *t) != Some(iterations) {
        trajectory.push((iterations, rho.clone()));
    }
    Ok(SqsafRun {
        trajectory,
        final_state: rho,
        iterations,
        converged,
    })
}

/// Per-iteration diagnostics of the graph flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostic {
    pub iteration: usize,
    pub purity_gap_max: f64,
    pub potential_j: f64,
}

/// Result of [`mu_flow_integrate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuFlowRun {
    pub trajectory: Vec<(usize, ProductState)>,
    pub final_state: ProductState,
    pub final_coordinates: CoordinateState,
    pub diagnostics: Vec<FlowDiagnostic>,
    pub iterations: usize,
    pub converged: bool,
}

/// Explicit coordinate-Euler stepper of `mu' = R_mu[Omega[mu]]`.
#[derive(Clone, Debug)]
pub struct MuFlow<'g> {
    graph: &'g WeightedGraph,
    coords: CoordinateState,
    state: ProductState,
    step_size: f64,
    iteration: usize,
}

impl<'g> MuFlow<'g> {
    /// Starts at `mu0` with `A_0 = Gamma^{-1}(mu0)`.
    pub fn new(graph: &'g WeightedGraph, mu0: &ProductState, step_size: f64) -> Result<Self> {
        check_len(graph.vertex_count(), mu0.len())?;
        let coords = CoordinateState::of(mu0);
        Self::from_coordinates(graph, coords, mu0.trace_scale(), step_size)
    }

    /// Starts at `Gamma_tau(A_0)`.
    pub fn from_coordinates(graph: &'g WeightedGraph, coords: CoordinateState, tau: f64, step_size: f64) -> Result<Self> {
        check_len(graph.vertex_count(), coords.len())?;
        let state = coords.to_product(tau)?;
        Ok(Self {
            graph,
            coords,
            state,
            step_size,
            iteration: 0,
        })
    }

    pub fn state(&self) -> &ProductState {
        &self.state
    }

    pub fn coordinates(&self) -> &CoordinateState {
        &self.coords
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// `J` of the current state.
    pub fn potential(&self) -> f64 {
        potential_with(&self.state, &omega_of_states(self.graph, &self.state))
    }

    pub fn step(&mut self) -> Result<()> {
        let t = self.iteration + 1;
        let eps = self.step_size;
        let tau = self.state.trace_scale();
        let om = omega_of_states(self.graph, &self.state);
        let coords: Vec<TangentMatrix> = self
            .coords
            .coords
            .par_iter()
            .zip(&om)
            .map(|(a, o)| a.axpy(eps, &project_traceless(o)))
            .collect();
        if coords.iter().any(|a| !a.is_finite()) {
            return Err(QsafError::NonFinite { iteration: Some(t) });
        }
        let states = coords
            .par_iter()
            .map(|a| gamma_tau(a, tau))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| QsafError::StepFailed {
                iteration: t,
                source: Box::new(e),
            })?;
        self.coords = CoordinateState { coords };
        self.state = ProductState { states };
        self.iteration = t;
        Ok(())
    }

    /// Steps until `stop(state)` holds or `cfg.max_iters` is reached,
    /// recording diagnostics at every iteration and states every
    /// `cfg.record_every` iterations plus the final one.
    pub fn integrate<F>(mut self, cfg: &FlowConfig, stop: F) -> Result<MuFlowRun>
    where
        F: Fn(&ProductState) -> bool,
    {
        cfg.validate()?;
        let mut trajectory = vec![(self.iteration, self.state.clone())];
        let mut diagnostics = Vec::new();
        let mut converged = false;
        loop {
            diagnostics.push(FlowDiagnostic {
                iteration: self.iteration,
                purity_gap_max: self.state.max_purity_gap(),
                potential_j: self.potential(),
            });
            if stop(&self.state) {
                converged = true;
                break;
            }
            if self.iteration >= cfg.max_iters {
                break;
            }
            self.step()?;
            if record_due(self.iteration, cfg.record_every) {
                trajectory.push((self.iteration, self.state.clone()));
            }
        }
        if trajectory.last().map(|(t, _)| *t) != Some(self.iteration) {
            trajectory.push((self.iteration, self.state.clone()));
        }
        Ok(MuFlowRun {
            trajectory,
            final_state: self.state,
            final_coordinates: self.coords,
            diagnostics,
            iterations: self.iteration,
            converged,
        })
    }
}

/// Integrates the S-flow from `mu0` until every vertex has purity gap at
/// most `purity_tol`.
pub fn mu_flow_integrate(g: &WeightedGraph, mu0: &ProductState, cfg: &FlowConfig) -> Result<MuFlowRun> {
    mu_flow_integrate_with(g, mu0, cfg, |s| s.max_purity_gap() <= cfg.purity_tol)
}

/// [`mu_flow_integrate`] with a custom stopping rule.
pub fn mu_flow_integrate_with<F>(g: &WeightedGraph, mu0: &ProductState, cfg: &FlowConfig, stop: F) -> Result<MuFlowRun>
where
    F: Fn(&ProductState) -> bool,
{
    cfg.validate()?;
    MuFlow::new(g, mu0, cfg.step_size)?.integrate(cfg, stop)
}

/// Recovers `rho` from consecutive S-flow states: `B_0 = 0`,
/// `B_{t+1} = B_t + eps Pi[mu_t]`, `rho_t = Gamma_tau(B_t)`. Returns
/// `rho_0, ..., rho_T` for `T = mu.len()`.
pub fn rho_flow_lift(g: &WeightedGraph, mu: &[ProductState], cfg: &FlowConfig) -> Result<Vec<ProductState>> {
    cfg.validate()?;
    let Some(first) = mu.first() else {
        return Ok(Vec::new());
    };
    let (n, c, tau) = (g.vertex_count(), first.dim(), first.trace_scale());
    let mut b = vec![TangentMatrix::zeros(c); n];
    let mut out = vec![ProductState::barycenter(n, c, tau)];
    for (t, m) in mu.iter().enumerate() {
        check_len(n, m.len())?;
        check_len(c, m.dim())?;
        b = b
            .par_iter()
            .zip(&m.states)
            .map(|(bi, mi)| bi.axpy(cfg.step_size, &project_traceless(mi.as_hermitian())))
            .collect();
        let states = b
            .par_iter()
            .map(|bi| gamma_tau(bi, tau))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| QsafError::StepFailed {
                iteration: t + 1,
                source: Box::new(e),
            })?;
        out.push(ProductState { states });
    }
    Ok(out)
}
