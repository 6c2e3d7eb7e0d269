//! One vertex: the density-matrix flow driven by a Hermitian `D`, or the
//! classical flow driven by a data vector.

use std::path::Path;

use anyhow::{bail, Result};
use num_complex::Complex64;
use qsaf::flow::sqsaf_integrate;
use qsaf::hermitian::spectral_decompose;
use qsaf::simplex::single_vertex_af;
use qsaf::{FlowConfig, HermitianMatrix};
use serde::Serialize;
use serde_json::json;

use crate::config::{Basis, Options, VertexMode};
use crate::io::{read_json, write_json, write_table, MatrixFile};
use crate::report::RunReport;
use crate::synthetic;

const TRAJECTORY_FILE: &str = "trajectory.csv";
const FINAL_STATE_FILE: &str = "final_state.json";
/// Relative spread of eigenvalues treated as one tied minimum.
const TIE_TOL: f64 = 1e-9;

#[derive(Serialize)]
struct Settings {
    mode: VertexMode,
    eigenvalues: Option<Vec<f64>>,
    basis: Basis,
    matrix: Option<String>,
    seed: u64,
    flow: FlowConfig,
}

pub fn run(opts: &Options, dir: &Path) -> Result<RunReport> {
    let settings = Settings {
        mode: opts.mode.unwrap_or(VertexMode::Density),
        eigenvalues: match (&opts.eigenvalues, &opts.matrix) {
            (Some(e), _) => Some(e.clone()),
            (None, None) => Some(vec![1.0, 2.0]),
            (None, Some(_)) => None,
        },
        basis: opts.basis.unwrap_or(Basis::Identity),
        matrix: opts.matrix.as_ref().map(|p| p.display().to_string()),
        seed: opts.seed(),
        flow: opts.flow(0.1, 1e-3)?,
    };
    match settings.mode {
        VertexMode::Density => run_density(opts, &settings, dir),
        VertexMode::Classical => run_classical(&settings, dir),
    }
}

fn tied_minimum(values: &[f64]) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    (0..values.len()).filter(|&j| values[j] - min <= TIE_TOL * scale).collect()
}

fn data_matrix(opts: &Options, s: &Settings) -> Result<HermitianMatrix> {
    if let (Some(path), None) = (&opts.matrix, &opts.eigenvalues) {
        return read_json::<MatrixFile>(path)?.to_hermitian();
    }
    let lambda = s.eigenvalues.clone().unwrap_or_default();
    if lambda.is_empty() {
        bail!("no eigenvalues given");
    }
    let diag = HermitianMatrix::from_real_diagonal(&lambda);
    Ok(match s.basis {
        Basis::Identity => diag,
        Basis::Random => diag.conjugate_by(&synthetic::random_unitary(&mut synthetic::rng(s.seed), lambda.len())),
    })
}

fn run_density(opts: &Options, s: &Settings, dir: &Path) -> Result<RunReport> {
    let d = data_matrix(opts, s)?;
    let c = d.dim();
    let tau = s.flow.trace_scale;
    let run = sqsaf_integrate(&d, &s.flow)?;

    let dec = spectral_decompose(&d)?;
    let tied = tied_minimum(dec.eigenvalues());
    let weight = tau / tied.len() as f64;
    let mut limit = HermitianMatrix::zeros(c);
    for &j in &tied {
        limit = limit.axpy(weight, &HermitianMatrix::outer(&dec.eigenvector(j)));
    }
    let limit_distance = run.final_state.as_hermitian().distance(&limit);

    let mut header = vec!["iter".to_string(), "purity_gap".to_string()];
    header.extend((1..=c).map(|k| format!("lambda_{k}")));
    let rows: Vec<Vec<f64>> = run
        .trajectory
        .iter()
        .map(|(t, rho)| {
            let mut row = vec![*t as f64, rho.purity_gap()];
            row.extend_from_slice(rho.eigenvalues());
            row
        })
        .collect();
    write_table(&dir.join(TRAJECTORY_FILE), &header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)?;
    write_json(&dir.join(FINAL_STATE_FILE), &MatrixFile::from_matrix(run.final_state.as_matrix()))?;

    Ok(RunReport {
        command: "single-vertex".into(),
        converged: run.converged,
        iterations: run.iterations,
        final_purity_gap_max: run.final_state.purity_gap(),
        diagnostics: None,
        config: serde_json::to_value(s)?,
        details: json!({
            "trajectory": TRAJECTORY_FILE,
            "final_state": FINAL_STATE_FILE,
            "data_eigenvalues": dec.eigenvalues(),
            "final_eigenvalues": run.final_state.eigenvalues(),
            "limit_multiplicity": tied.len(),
            "limit_distance": limit_distance,
        }),
    })
}

fn run_classical(s: &Settings, dir: &Path) -> Result<RunReport> {
    let Some(d) = s.eigenvalues.clone() else {
        bail!("classical mode takes a data vector via --eigenvalues, not a matrix file");
    };
    let run = single_vertex_af(&d, &s.flow)?;
    let tied = tied_minimum(&d);
    let mut limit = vec![0.0; d.len()];
    for &j in &tied {
        limit[j] = 1.0 / tied.len() as f64;
    }
    let p = run.final_state.probs();
    let limit_distance = p.iter().zip(&limit).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();

    let mut header = vec!["iter".to_string(), "purity_gap".to_string()];
    header.extend((1..=d.len()).map(|k| format!("p_{k}")));
    let rows: Vec<Vec<f64>> = run
        .trajectory
        .iter()
        .map(|(t, q)| {
            let mut row = vec![*t as f64, q.purity_gap()];
            row.extend_from_slice(q.probs());
            row
        })
        .collect();
    write_table(&dir.join(TRAJECTORY_FILE), &header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)?;
    let diag: Vec<Complex64> = p.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let state = qsaf::CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    write_json(&dir.join(FINAL_STATE_FILE), &MatrixFile::from_matrix(&state))?;

    Ok(RunReport {
        command: "single-vertex".into(),
        converged: run.converged,
        iterations: run.iterations,
        final_purity_gap_max: run.final_state.purity_gap(),
        diagnostics: None,
        config: serde_json::to_value(s)?,
        details: json!({
            "trajectory": TRAJECTORY_FILE,
            "final_state": FINAL_STATE_FILE,
            "final_probabilities": p,
            "limit_multiplicity": tied.len(),
            "limit_distance": limit_distance,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_are_detected() {
        assert_eq!(tied_minimum(&[0.2, 0.9, 0.5]), vec![0]);
        assert_eq!(tied_minimum(&[1.0, 0.0, 0.0]), vec![1, 2]);
    }
}
