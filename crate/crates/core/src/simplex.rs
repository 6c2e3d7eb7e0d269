//! The classical assignment flow on the probability simplex.
//!
//! Points are strictly positive probability vectors; tangent vectors sum to
//! zero. The flows are integrated in exponential coordinates (`p = softmax(a)`),
//! so every iterate stays in the open simplex by construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QsafError, Result};
use crate::flow::{record_due, FlowConfig};
use crate::graph::WeightedGraph;

const SUM_TOL: f64 = 1e-12;

/// Ratio between the stationarity threshold on `|dp/dt|_inf` and the purity
/// tolerance of the single-vertex flow.
const STATIONARY_FACTOR: f64 = 1e-3;

/// A point of the open probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(QsafError::InvalidArgument("empty probability vector".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(QsafError::InvalidArgument(
                "probabilities must be strictly positive".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(QsafError::InvalidArgument(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self(probs))
    }

    /// The barycenter `1/c`.
    pub fn barycenter(dim: usize) -> Self {
        Self(vec![1.0 / dim as f64; dim])
    }

    /// `softmax(v)`, the normalized exponential of arbitrary coordinates.
    pub fn softmax(v: &[f64]) -> Self {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
        let s: f64 = e.iter().sum();
        Self(e.into_iter().map(|x| x / s).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// `1 - sum p_j^2`; zero only at vertices of the simplex.
    pub fn purity_gap(&self) -> f64 {
        (1.0 - self.0.iter().map(|p| p * p).sum::<f64>()).max(0.0)
    }

    /// Entrywise logarithm.
    pub fn log(&self) -> Vec<f64> {
        self.0.iter().map(|p| p.ln()).collect()
    }
}

/// A vector with zero sum: a tangent vector of the simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexTangent(Vec<f64>);

impl SimplexTangent {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let sum: f64 = values.iter().sum();
        let scale = values.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if sum.abs() > SUM_TOL * scale {
            return Err(QsafError::InvalidArgument(format!(
                "tangent vector sums to {sum}, not 0"
            )));
        }
        Ok(Self(values))
    }

    /// `v - mean(v) 1`.
    pub fn project(v: &[f64]) -> Self {
        Self(project_zero_sum(v))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub fn project_zero_sum(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

/// One simplex point per graph vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    rows: Vec<SimplexPoint>,
}

impl AssignmentMatrix {
    pub fn new(rows: Vec<SimplexPoint>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(QsafError::InvalidArgument("assignment matrix has no rows".into()));
        };
        let c = first.dim();
        if let Some(r) = rows.iter().find(|r| r.dim() != c) {
            return Err(QsafError::DimensionMismatch {
                expected: c,
                found: r.dim(),
            });
        }
        Ok(Self { rows })
    }

    /// Every row at the barycenter.
    pub fn barycenter(n: usize, c: usize) -> Self {
        Self {
            rows: vec![SimplexPoint::barycenter(c); n],
        }
    }

    pub fn rows(&self) -> &[SimplexPoint] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SimplexPoint {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].dim()
    }

    pub fn max_purity_gap(&self) -> f64 {
        self.rows.iter().map(SimplexPoint::purity_gap).fold(0.0, f64::max)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(QsafError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `R_p v = p * v - <p, v> p`.
pub fn replicator_simplex(p: &SimplexPoint, v: &[f64]) -> Result<SimplexTangent> {
    check_len(p.dim(), v.len())?;
    let pv: f64 = p.0.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(SimplexTangent(
        p.0.iter().zip(v).map(|(pi, vi)| pi * (vi - pv)).collect(),
    ))
}

/// `exp_p(v) = p e^v / <p, e^v>`.
pub fn lift_exp_simplex(p: &SimplexPoint, v: &SimplexTangent) -> Result<SimplexPoint> {
    check_len(p.dim(), v.0.len())?;
    Ok(lift_exp_coords(p, &v.0))
}

fn lift_exp_coords(p: &SimplexPoint, v: &[f64]) -> SimplexPoint {
    let coords: Vec<f64> = p.0.iter().zip(v).map(|(pi, vi)| pi.ln() + vi).collect();
    SimplexPoint::softmax(&coords)
}

/// Likelihood vector `L_p(D) = exp_p(-pi_0 D)`.
pub fn likelihood_simplex(p: &SimplexPoint, d: &[f64]) -> Result<SimplexPoint> {
    check_len(p.dim(), d.len())?;
    let v: Vec<f64> = project_zero_sum(d).into_iter().map(|x| -x).collect();
    Ok(lift_exp_coords(p, &v))
}

/// Result of [`single_vertex_af`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleVertexRun {
    /// `(iteration, p_t)` at every `record_every` steps plus the final state.
    pub trajectory: Vec<(usize, SimplexPoint)>,
    pub final_state: SimplexPoint,
    pub iterations: usize,
    pub converged: bool,
}

/// Integrates the single-vertex flow `p' = R_p L_p(D)` from the barycenter.
///
/// The flow is solved through its parametrization `q' = R_q q`,
/// `q(0) = L_1(D)`, `p = softmax(int q)`: the coordinates of `q` take
/// explicit Euler steps `b += eps * pi_0 q` and `p` accumulates `eps * q`.
/// The run stops once `1 - |p|^2 <= purity_tol` or once `|dp/dt|_inf` drops
/// below `1e-3 * purity_tol` (a tied minimum converges to a mixed vertex
/// of a face and never becomes pure).
pub fn single_vertex_af(d: &[f64], cfg: &FlowConfig) -> Result<SingleVertexRun> {
    cfg.validate()?;
    if d.is_empty() || d.iter().any(|x| !x.is_finite()) {
        return Err(QsafError::InvalidArgument("data vector must be finite and non-empty".into()));
    }
    let c = d.len();
    let eps = cfg.step_size;
    let mut b: Vec<f64> = project_zero_sum(d).into_iter().map(|x| -x).collect();
    let mut acc = vec![0.0; c];
    let mut p = SimplexPoint::barycenter(c);
    let mut trajectory = vec![(0, p.clone())];
    let stationary_tol = STATIONARY_FACTOR * cfg.purity_tol;

    for t in 0..cfg.max_iters {
        if p.purity_gap() <= cfg.purity_tol {
            return Ok(finish(trajectory, p, t, true));
        }
        let q = SimplexPoint::softmax(&b);
        let step = project_zero_sum(q.probs());
        for j in 0..c {
            b[j] += eps * step[j];
            acc[j] += eps * q.0[j];
        }
        let next = SimplexPoint::softmax(&acc);
        if next.0.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(QsafError::NonFinite { iteration: Some(t + 1) });
        }
        let speed = next
            .0
            .iter()
            .zip(&p.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / eps;
        p = next;
        if record_due(t + 1, cfg.record_every) {
            trajectory.push((t + 1, p.clone()));
        }
        if speed <= stationary_tol {
            return Ok(finish(trajectory, p, t + 1, true));
        }
    }
    let converged = p.purity_gap() <= cfg.purity_tol;
    Ok(finish(trajectory, p, cfg.max_iters, converged))
}

fn finish(
    mut trajectory: Vec<(usize, SimplexPoint)>,
    p: SimplexPoint,
    iterations: usize,
    converged: bool,
) -> SingleVertexRun {
    if trajectory.last().map(|(t, _)| *t) != Some(iterations) {
        trajectory.push((iterations, p.clone()));
    }
    SingleVertexRun {
        trajectory,
        final_state: p,
        iterations,
        converged,
    }
}

/// Similarity vectors `S_i = softmax(sum_k w_ik (log W_k - D_k))`.
pub fn similarity_simplex(w: &AssignmentMatrix, d: &[Vec<f64>], g: &WeightedGraph) -> Result<AssignmentMatrix> {
    check_len(g.vertex_count(), w.len())?;
    check_len(g.vertex_count(), d.len())?;
    let c = w.dim();
    if let Some(row) = d.iter().find(|r| r.len() != c) {
        return Err(QsafError::DimensionMismatch {
            expected: c,
            found: row.len(),
        });
    }
    let logs: Vec<Vec<f64>> = w.rows.iter().map(SimplexPoint::log).collect();
    let rows = (0..g.vertex_count())
        .map(|i| {
            let mut acc = vec![0.0; c];
            for (k, wk) in g.neighbors(i) {
                for j in 0..c {
                    acc[j] += wk * (logs[k][j] - d[k][j]);
                }
            }
            SimplexPoint::softmax(&acc)
        })
        .collect();
    Ok(AssignmentMatrix { rows })
}

/// Per-iteration record of the S-flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexDiagnostic {
    pub iteration: usize,
    pub purity_gap_max: f64,
}

/// Result of [`s_flow_integrate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SFlowRun {
    pub trajectory: Vec<(usize, AssignmentMatrix)>,
    pub final_state: AssignmentMatrix,
    pub diagnostics: Vec<SimplexDiagnostic>,
    pub iterations: usize,
    pub converged: bool,
}

/// Explicit Euler stepper for `S' = R_S[Omega S]` in exponential
/// coordinates: `a_{t+1} = a_t + eps * pi_0 (Omega softmax(a_t))_i`.
#[derive(Clone, Debug)]
pub struct SFlow<'g> {
    graph: &'g WeightedGraph,
    coords: Vec<Vec<f64>>,
    state: AssignmentMatrix,
    step_size: f64,
    iteration: usize,
}

impl<'g> SFlow<'g> {
    pub fn new(graph: &'g WeightedGraph, s0: &AssignmentMatrix, step_size: f64) -> Result<Self> {
        check_len(graph.vertex_count(), s0.len())?;
        let coords: Vec<Vec<f64>> = s0.rows.iter().map(|r| project_zero_sum(&r.log())).collect();
        let state = AssignmentMatrix {
            rows: coords.iter().map(|a| SimplexPoint::softmax(a)).collect(),
        };
        Ok(Self {
            graph,
            coords,
            state,
            step_size,
            iteration: 0,
        })
    }

    pub fn state(&self) -> &AssignmentMatrix {
        &self.state
    }

    pub fn coordinates(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn step(&mut self) -> Result<()> {
        let g = self.graph;
        let c = self.state.dim();
        let eps = self.step_size;
        let rows = &self.state.rows;
        let coords: Vec<Vec<f64>> = self
            .coords
            .par_iter()
            .enumerate()
            .map(|(i, a)| {
                let mut avg = vec![0.0; c];
                for (k, wk) in g.neighbors(i) {
                    for j in 0..c {
                        avg[j] += wk * rows[k].0[j];
                    }
                }
                let step = project_zero_sum(&avg);
                a.iter().zip(step).map(|(x, s)| x + eps * s).collect()
            })
            .collect();
        if coords.iter().flatten().any(|x| !x.is_finite()) {
            return Err(QsafError::NonFinite {
                iteration: Some(self.iteration + 1),
            });
        }
        self.state = AssignmentMatrix {
            rows: coords.iter().map(|a| SimplexPoint::softmax(a)).collect(),
        };
        debug_assert!(self.state.rows.iter().all(|r| r.0.iter().all(|&p| p > 0.0)));
        self.coords = coords;
        self.iteration += 1;
        Ok(())
    }
}

/// Integrates the classical S-flow until every row is within `purity_tol`
/// of a simplex vertex or `max_iters` is reached.
pub fn s_flow_integrate(s0: &AssignmentMatrix, g: &WeightedGraph, cfg: &FlowConfig) -> Result<SFlowRun> {
    cfg.validate()?;
    let mut flow = SFlow::new(g, s0, cfg.step_size)?;
    let mut trajectory = vec![(0, flow.state().clone())];
    let mut diagnostics = Vec::new();
    let mut converged = false;
    loop {
        let gap = flow.state().max_purity_gap();
        diagnostics.push(SimplexDiagnostic {
            iteration: flow.iteration(),
            purity_gap_max: gap,
        });
        if gap <= cfg.purity_tol {
            converged = true;
            break;
        }
        if flow.iteration() >= cfg.max_iters {
            break;
        }
        flow.step()?;
        if record_due(flow.iteration(), cfg.record_every) {
            trajectory.push((flow.iteration(), flow.state().clone()));
        }
    }
    let iterations = flow.iteration();
    if trajectory.last().map(|(t, _)| *t) != Some(iterations) {
        trajectory.push((iterations, flow.state().clone()));
    }
    Ok(SFlowRun {
        trajectory,
        final_state: flow.state().clone(),
        diagnostics,
        iterations,
        converged,
    })
}
