//! Smoothing of color images encoded as Bloch vectors of 2x2 density
//! matrices on a pixel grid.

use std::path::Path;

use anyhow::{bail, Result};
use image::{Rgb, RgbImage};
use qsaf::encodings::{bloch_decode, bloch_encode, bloch_to_rgb, rgb_to_bloch, BlochVector};
use qsaf::flow::mu_flow_integrate_with;
use qsaf::{FlowConfig, ProductState, WeightedGraph};
use serde::Serialize;
use serde_json::json;

use crate::config::{Options, WeightMode};
use crate::io::{read_rgb, write_diagnostics, write_rgb};
use crate::report::{RunReport, DIAGNOSTICS_FILE};
use crate::synthetic::{nearest_label, BlochScene};

/// Pixels counted as interior lie this far from any other region.
const INTERIOR_RADIUS: usize = 2;

#[derive(Serialize)]
struct Settings {
    input: Option<String>,
    rows: usize,
    cols: usize,
    radius: usize,
    weights: WeightMode,
    noise_sigma: f64,
    seed: u64,
    stop_norm: f64,
    flow: FlowConfig,
}

fn min_bloch_norm(mu: &ProductState) -> f64 {
    mu.states()
        .iter()
        .map(|s| bloch_decode(s).map_or(0.0, |d| d.norm()))
        .fold(f64::INFINITY, f64::min)
}

fn to_image(rows: usize, cols: usize, d: &[BlochVector]) -> RgbImage {
    RgbImage::from_fn(cols as u32, rows as u32, |x, y| Rgb(bloch_to_rgb(&d[y as usize * cols + x as usize])))
}

/// Grid graph on the pixels with uniform weights or Gaussian weights on
/// the distance between input Bloch vectors.
fn pixel_graph(rows: usize, cols: usize, radius: usize, mode: WeightMode, d: &[BlochVector]) -> Result<WeightedGraph> {
    let nbrs = WeightedGraph::grid_neighborhoods(rows, cols, radius);
    Ok(match mode {
        WeightMode::Uniform => WeightedGraph::uniform(nbrs)?,
        WeightMode::Gaussian(t) => {
            let raw = nbrs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let a = d[i].components();
                    v.iter()
                        .map(|&k| {
                            let b = d[k].components();
                            let dist: f64 = (0..3).map(|j| (a[j] - b[j]).powi(2)).sum();
                            (-t * dist).exp()
                        })
                        .collect()
                })
                .collect();
            WeightedGraph::from_raw_weights(nbrs, raw)?
        }
    })
}

pub fn run(opts: &Options, dir: &Path) -> Result<RunReport> {
    let input_image = opts.input.as_deref().map(read_rgb).transpose()?;
    let (rows, cols) = match &input_image {
        Some(img) => (img.height() as usize, img.width() as usize),
        None => (opts.rows.unwrap_or(32), opts.cols.unwrap_or(32)),
    };
    if rows == 0 || cols == 0 {
        bail!("image is empty");
    }
    let s = Settings {
        input: opts.input.as_ref().map(|p| p.display().to_string()),
        rows,
        cols,
        radius: opts.radius.unwrap_or(1),
        weights: opts.weight_mode(),
        noise_sigma: opts.noise_sigma.unwrap_or(0.3),
        seed: opts.seed(),
        stop_norm: opts.stop_norm.unwrap_or(0.999),
        flow: opts.flow(0.1, 1e-3)?,
    };

    let scene = match &input_image {
        Some(_) => None,
        None => Some(BlochScene::generate(rows, cols, s.noise_sigma, s.seed)),
    };
    let d: Vec<BlochVector> = match (&input_image, &scene) {
        (Some(img), _) => img.pixels().map(|p| rgb_to_bloch(p.0)).collect(),
        (None, Some(sc)) => sc.noisy.clone(),
        (None, None) => unreachable!(),
    };

    let g = pixel_graph(rows, cols, s.radius, s.weights, &d)?;
    let mu0 = ProductState::new(d.iter().map(bloch_encode).collect::<qsaf::Result<Vec<_>>>()?)?;
    let stop_norm = s.stop_norm;
    let run = mu_flow_integrate_with(&g, &mu0, &s.flow, |mu| min_bloch_norm(mu) >= stop_norm)?;

    let decoded: Vec<BlochVector> = run
        .final_state
        .states()
        .iter()
        .map(bloch_decode)
        .collect::<qsaf::Result<_>>()?;
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &run.diagnostics)?;
    write_rgb(&dir.join("input.png"), &to_image(rows, cols, &d))?;
    write_rgb(&dir.join("output.png"), &to_image(rows, cols, &decoded))?;

    let mut details = json!({
        "min_bloch_norm": min_bloch_norm(&run.final_state),
        "output_image": "output.png",
    });
    if let Some(sc) = &scene {
        let clean: Vec<BlochVector> = sc.labels.iter().map(|&l| BlochVector::clamped(sc.palette[l], 1.0)).collect();
        write_rgb(&dir.join("clean.png"), &to_image(rows, cols, &clean))?;
        let interior = sc.interior(INTERIOR_RADIUS);
        let total = interior.iter().filter(|&&b| b).count();
        let correct = (0..rows * cols)
            .filter(|&i| interior[i] && nearest_label(&sc.palette, decoded[i].components()) == sc.labels[i])
            .count();
        details["interior_pixels"] = json!(total);
        details["interior_correct"] = json!(correct);
        details["interior_accuracy"] = json!(if total > 0 { correct as f64 / total as f64 } else { 1.0 });
    }

    Ok(RunReport {
        command: "bloch-denoise".into(),
        converged: run.converged,
        iterations: run.iterations,
        final_purity_gap_max: run.final_state.max_purity_gap(),
        diagnostics: Some(DIAGNOSTICS_FILE.into()),
        config: serde_json::to_value(&s)?,
        details,
    })
}
