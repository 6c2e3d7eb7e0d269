//! Structure-preserving smoothing of gray image patches. Patches are
//! encoded as Hermitian data matrices, driven to pure states by the graph
//! flow and decoded against the input patches.

use std::path::Path;

use anyhow::{bail, Result};
use qsaf::encodings::{
    fourier_frame_decode, fourier_frame_encode, fourier_frame_state, gaussian_patch_weights, knn_neighborhoods,
    patch_rank_one_decode, patch_rank_one_encode, Patch,
};
use qsaf::flow::{initial_coordinates, MuFlow};
use qsaf::{FlowConfig, HermitianMatrix, WeightedGraph};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::json;

use crate::config::{Adjacency, Encoder, Options, WeightMode};
use crate::io::{from_gray, read_rgb, to_gray, write_diagnostics, write_rgb};
use crate::report::{RunReport, DIAGNOSTICS_FILE};
use crate::synthetic::{self, PatchScene};

/// Mixing weight of the reference states used for the Fourier
/// self-consistency check.
const SELF_CHECK_DELTA: f64 = 1e-8;

#[derive(Serialize)]
struct Settings {
    input: Option<String>,
    width: usize,
    height: usize,
    patch_size: usize,
    encoder: Encoder,
    adjacency: Adjacency,
    radius: usize,
    weights: WeightMode,
    noise_sigma: f64,
    seed: u64,
    flow: FlowConfig,
}

/// Row-major tiles of size `s`; pixels beyond the last full tile are
/// cropped.
fn tiles(width: usize, height: usize, s: usize) -> (usize, usize) {
    (height / s, width / s)
}

fn tile_values(values: &[f64], width: usize, s: usize, ty: usize, tx: usize) -> Vec<f64> {
    (0..s * s)
        .map(|k| values[(ty * s + k / s) * width + tx * s + k % s])
        .collect()
}

/// Grid neighborhoods on the tile grid restricted to the `active` tiles and
/// renumbered to vertex indices.
fn grid_adjacency(tile_rows: usize, tile_cols: usize, radius: usize, active: &[usize]) -> Vec<Vec<usize>> {
    let mut vertex = vec![usize::MAX; tile_rows * tile_cols];
    for (v, &t) in active.iter().enumerate() {
        vertex[t] = v;
    }
    let full = WeightedGraph::grid_neighborhoods(tile_rows, tile_cols, radius);
    active
        .iter()
        .map(|&t| full[t].iter().map(|&k| vertex[k]).filter(|&v| v != usize::MAX).collect())
        .collect()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Smallest correlation between a patch and the Fourier decoding of the
/// pure state built from its own magnitudes.
pub fn fourier_self_consistency(patches: &[Patch]) -> Result<f64> {
    let mut worst = 1.0f64;
    for p in patches {
        let mu = fourier_frame_state(p, SELF_CHECK_DELTA)?;
        let q = fourier_frame_decode(&mu, p, SELF_CHECK_DELTA)?;
        worst = worst.min(correlation(&q.reconstruct(), &p.reconstruct()));
    }
    Ok(worst)
}

pub fn run(opts: &Options, dir: &Path) -> Result<RunReport> {
    let patch_size = opts.patch_size.unwrap_or(5);
    if patch_size == 0 {
        bail!("patch size must be positive");
    }
    let seed = opts.seed();
    let noise_sigma = opts.noise_sigma.unwrap_or(0.0);
    let (width, height, mut values, scene) = match opts.input.as_deref() {
        Some(path) => {
            let img = read_rgb(path)?;
            (img.width() as usize, img.height() as usize, to_gray(&img), None)
        }
        None => {
            let sc = PatchScene::two_populations(patch_size, opts.rows.unwrap_or(12), opts.cols.unwrap_or(12), seed);
            (sc.width, sc.height, sc.values.clone(), Some(sc))
        }
    };
    if noise_sigma > 0.0 {
        let mut rng = synthetic::rng(seed.wrapping_add(1));
        for v in &mut values {
            *v = (*v + noise_sigma * rng.sample::<f64, _>(StandardNormal)).round().clamp(0.0, 255.0);
        }
    }
    let s = Settings {
        input: opts.input.as_ref().map(|p| p.display().to_string()),
        width,
        height,
        patch_size,
        encoder: opts.encoder.unwrap_or(Encoder::RankOne),
        adjacency: opts.adjacency.unwrap_or(Adjacency::Grid),
        radius: opts.radius.unwrap_or(1),
        weights: opts.weight_mode(),
        noise_sigma,
        seed,
        flow: opts.flow(0.1, 1e-3)?,
    };

    let (tile_rows, tile_cols) = tiles(width, height, patch_size);
    if tile_rows * tile_cols == 0 {
        bail!("image of {width}x{height} holds no {patch_size}x{patch_size} patch");
    }
    let all: Vec<Patch> = (0..tile_rows * tile_cols)
        .map(|t| Patch::from_values(patch_size, &tile_values(&values, width, patch_size, t / tile_cols, t % tile_cols)))
        .collect::<qsaf::Result<_>>()?;
    let active: Vec<usize> = (0..all.len()).filter(|&t| !all[t].is_degenerate()).collect();
    if active.is_empty() {
        bail!("every patch is constant");
    }
    let patches: Vec<Patch> = active.iter().map(|&t| all[t].clone()).collect();

    let nbrs = match s.adjacency {
        Adjacency::Grid => grid_adjacency(tile_rows, tile_cols, s.radius, &active),
        Adjacency::Knn(k) => knn_neighborhoods(&patches, k.min(patches.len() - 1)),
    };
    let g = match s.weights {
        WeightMode::Uniform => WeightedGraph::uniform(nbrs)?,
        WeightMode::Gaussian(t) => gaussian_patch_weights(&patches, nbrs, t)?,
    };
    let data: Vec<HermitianMatrix> = patches
        .iter()
        .map(|p| match s.encoder {
            Encoder::RankOne => patch_rank_one_encode(p),
            Encoder::Fourier => fourier_frame_encode(p),
        })
        .collect::<qsaf::Result<_>>()?;
    let flow = MuFlow::from_coordinates(&g, initial_coordinates(&g, &data)?, s.flow.trace_scale, s.flow.step_size)?;
    let tol = s.flow.purity_tol;
    let run = flow.integrate(&s.flow, |mu| mu.max_purity_gap() <= tol)?;

    let mut output = values.clone();
    let mut undecoded = 0;
    for (v, (&t, p)) in active.iter().zip(&patches).enumerate() {
        let mu = run.final_state.state(v);
        let decoded = match s.encoder {
            Encoder::RankOne => patch_rank_one_decode(mu, p, tol),
            Encoder::Fourier => fourier_frame_decode(mu, p, tol),
        };
        let Ok(q) = decoded else {
            undecoded += 1;
            continue;
        };
        let (ty, tx) = (t / tile_cols, t % tile_cols);
        for (k, x) in q.reconstruct().into_iter().enumerate() {
            output[(ty * patch_size + k / patch_size) * width + tx * patch_size + k % patch_size] = x;
        }
    }

    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &run.diagnostics)?;
    write_rgb(&dir.join("input.png"), &from_gray(width as u32, height as u32, &values))?;
    write_rgb(&dir.join("output.png"), &from_gray(width as u32, height as u32, &output))?;

    let mut details = json!({
        "vertices": active.len(),
        "skipped_constant_patches": all.len() - active.len(),
        "undecoded_patches": undecoded,
        "output_image": "output.png",
    });
    if s.encoder == Encoder::Fourier {
        details["fourier_self_consistency"] = json!(fourier_self_consistency(&patches)?);
    }
    if let Some(sc) = &scene {
        let pop: Vec<usize> = active.iter().map(|&t| sc.populations[t]).collect();
        let mut within = 0.0f64;
        let mut between = f64::INFINITY;
        for i in 0..pop.len() {
            for j in i + 1..pop.len() {
                let dist = run.final_state.state(i).as_hermitian().distance(run.final_state.state(j).as_hermitian());
                if pop[i] == pop[j] {
                    within = within.max(dist);
                } else {
                    between = between.min(dist);
                }
            }
        }
        details["max_within_population_distance"] = json!(within);
        details["min_between_population_distance"] = json!(between);
    }

    Ok(RunReport {
        command: "patch-smooth".into(),
        converged: run.converged && undecoded == 0,
        iterations: run.iterations,
        final_purity_gap_max: run.final_state.max_purity_gap(),
        diagnostics: Some(DIAGNOSTICS_FILE.into()),
        config: serde_json::to_value(&s)?,
        details,
    })
}
