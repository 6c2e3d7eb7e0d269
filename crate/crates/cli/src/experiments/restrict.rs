//! Runs the density-matrix flow on commuting data next to the classical
//! assignment flow on the eigenvalues and reports their largest deviation.

use std::path::Path;

use anyhow::{bail, Result};
use qsaf::encodings::commuting_dataset;
use qsaf::flow::{initial_coordinates, FlowDiagnostic, MuFlow};
use qsaf::simplex::{similarity_simplex, AssignmentMatrix, SFlow};
use qsaf::{CMatrix, HermitianMatrix, WeightedGraph};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{Basis, Options};
use crate::io::{write_diagnostics, write_table};
use crate::report::{RunReport, DIAGNOSTICS_FILE};
use crate::synthetic;

const DEVIATION_FILE: &str = "deviation.csv";

#[derive(Serialize)]
struct Settings {
    rows: usize,
    cols: usize,
    radius: usize,
    dim: usize,
    steps: usize,
    step_size: f64,
    basis: Basis,
    noncommuting: bool,
    seed: u64,
    restrict_tol: f64,
}

pub fn run(opts: &Options, dir: &Path) -> Result<RunReport> {
    let s = Settings {
        rows: opts.rows.unwrap_or(8),
        cols: opts.cols.unwrap_or(8),
        radius: opts.radius.unwrap_or(1),
        dim: opts.dim.unwrap_or(4),
        steps: opts.steps.unwrap_or(500),
        step_size: opts.flow(0.05, 1e-3)?.step_size,
        basis: opts.basis.unwrap_or(Basis::Random),
        noncommuting: opts.noncommuting,
        seed: opts.seed(),
        restrict_tol: opts.restrict_tol.unwrap_or(1e-8),
    };
    if s.dim < 2 {
        bail!("dimension must be at least 2");
    }
    let n = s.rows * s.cols;
    let c = s.dim;
    let mut rng = synthetic::rng(s.seed);
    let lambdas: Vec<Vec<f64>> = (0..n).map(|_| (0..c).map(|_| rng.random::<f64>()).collect()).collect();
    let u = match s.basis {
        Basis::Identity => CMatrix::identity(c, c),
        Basis::Random => synthetic::random_unitary(&mut rng, c),
    };
    let data: Vec<HermitianMatrix> = if s.noncommuting {
        lambdas
            .iter()
            .map(|l| HermitianMatrix::from_real_diagonal(l).conjugate_by(&synthetic::random_unitary(&mut rng, c)))
            .collect()
    } else {
        commuting_dataset(&u, &lambdas)?
    };

    let g = WeightedGraph::grid(s.rows, s.cols, s.radius)?;
    let s0 = similarity_simplex(&AssignmentMatrix::barycenter(n, c), &lambdas, &g)?;
    let mut classical = SFlow::new(&g, &s0, s.step_size)?;
    let mut quantum = MuFlow::from_coordinates(&g, initial_coordinates(&g, &data)?, 1.0, s.step_size)?;

    let mut deviation_rows = Vec::with_capacity(s.steps + 1);
    let mut diagnostics = Vec::with_capacity(s.steps + 1);
    let mut worst = 0.0f64;
    for t in 0..=s.steps {
        if t > 0 {
            classical.step()?;
            quantum.step()?;
        }
        let dev = (0..n)
            .map(|i| {
                let embedded = HermitianMatrix::from_real_diagonal(classical.state().row(i).probs()).conjugate_by(&u);
                quantum.state().state(i).as_hermitian().distance(&embedded)
            })
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        deviation_rows.push(vec![t as f64, dev]);
        diagnostics.push(FlowDiagnostic {
            iteration: t,
            purity_gap_max: quantum.state().max_purity_gap(),
            potential_j: quantum.potential(),
        });
    }
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &diagnostics)?;
    write_table(&dir.join(DEVIATION_FILE), &["iter", "max_deviation"], &deviation_rows)?;

    let agrees = worst <= s.restrict_tol;
    Ok(RunReport {
        command: "restrict-check".into(),
        // the negative control passes when the deviation is detected
        converged: agrees != s.noncommuting,
        iterations: s.steps,
        final_purity_gap_max: quantum.state().max_purity_gap(),
        diagnostics: Some(DIAGNOSTICS_FILE.into()),
        config: serde_json::to_value(&s)?,
        details: json!({
            "max_deviation": worst,
            "agrees": agrees,
            "deviation": DEVIATION_FILE,
        }),
    })
}
