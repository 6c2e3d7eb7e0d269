//! Traces the potential `J` along the graph flow on a periodic grid, where
//! the weights are symmetric and `J` is a Lyapunov function.

use std::path::Path;

use anyhow::Result;
use num_complex::Complex64;
use qsaf::flow::{initial_coordinates, MuFlow};
use qsaf::{CMatrix, FlowConfig, HermitianMatrix, WeightedGraph};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::json;

use crate::config::Options;
use crate::io::write_diagnostics;
use crate::report::{RunReport, DIAGNOSTICS_FILE};
use crate::synthetic;

/// Slack allowed for a step to count as non-increasing.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Serialize)]
struct Settings {
    rows: usize,
    cols: usize,
    radius: usize,
    dim: usize,
    seed: u64,
    flow: FlowConfig,
}

pub fn run(opts: &Options, dir: &Path) -> Result<RunReport> {
    let s = Settings {
        rows: opts.rows.unwrap_or(8),
        cols: opts.cols.unwrap_or(8),
        radius: opts.radius.unwrap_or(1),
        dim: opts.dim.unwrap_or(3),
        seed: opts.seed(),
        flow: opts.flow(0.1, 1e-3)?,
    };
    let c = s.dim;
    let mut rng = synthetic::rng(s.seed);
    let data: Vec<HermitianMatrix> = (0..s.rows * s.cols)
        .map(|_| {
            let m = CMatrix::from_fn(c, c, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            HermitianMatrix::hermitian_part(&m)
        })
        .collect::<qsaf::Result<_>>()?;
    let g = WeightedGraph::torus(s.rows, s.cols, s.radius)?;
    let flow = MuFlow::from_coordinates(&g, initial_coordinates(&g, &data)?, s.flow.trace_scale, s.flow.step_size)?;
    let tol = s.flow.purity_tol;
    let run = flow.integrate(&s.flow, |mu| mu.max_purity_gap() <= tol)?;
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &run.diagnostics)?;

    let js: Vec<f64> = run.diagnostics.iter().map(|d| d.potential_j).collect();
    let increases = js.windows(2).filter(|w| w[1] > w[0] + MONOTONE_SLACK).count();
    Ok(RunReport {
        command: "potential-trace".into(),
        converged: run.converged,
        iterations: run.iterations,
        final_purity_gap_max: run.final_state.max_purity_gap(),
        diagnostics: Some(DIAGNOSTICS_FILE.into()),
        config: serde_json::to_value(&s)?,
        details: json!({
            "symmetric_weights": g.is_symmetric(),
            "initial_potential": js.first(),
            "final_potential": js.last(),
            "increasing_steps": increases,
        }),
    })
}
