use std::path::Path;
use std::process::Command as Process;

use image::{Rgb, RgbImage};
use qsaf::flow::FlowDiagnostic;
use qsaf_cli::config::{Adjacency, Basis, Encoder, Options, VertexMode};
use qsaf_cli::experiments::{run, Command};
use qsaf_cli::io::{read_diagnostics, read_json, read_rgb, write_diagnostics, write_json, write_rgb, MatrixFile};
use qsaf_cli::report::RunReport;
use qsaf_cli::synthetic::AXIS_PALETTE;

fn opts(dir: &Path) -> Options {
    Options {
        out: Some(dir.to_path_buf()),
        ..Options::default()
    }
}

fn qsaf(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_qsaf")).args(args).output().unwrap()
}

#[test]
fn ppm_round_trip_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let img = RgbImage::from_fn(7, 5, |x, y| Rgb([(x * 30) as u8, (y * 50) as u8, (x * y) as u8]));
    let a = tmp.path().join("a.ppm");
    let b = tmp.path().join("b.ppm");
    write_rgb(&a, &img).unwrap();
    let back = read_rgb(&a).unwrap();
    assert_eq!(back, img);
    write_rgb(&b, &back).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let png = tmp.path().join("c.png");
    write_rgb(&png, &img).unwrap();
    assert_eq!(read_rgb(&png).unwrap(), img);
    assert!(write_rgb(&tmp.path().join("d.bmp"), &img).is_err());
    std::fs::write(tmp.path().join("bad.ppm"), b"P6\n3 3\n255\n").unwrap();
    assert!(read_rgb(&tmp.path().join("bad.ppm")).is_err());
}

#[test]
fn diagnostics_csv_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("d.csv");
    let diags = vec![
        FlowDiagnostic {
            iteration: 0,
            purity_gap_max: 0.5,
            potential_j: -1.25,
        },
        FlowDiagnostic {
            iteration: 1,
            purity_gap_max: 0.1 + 0.2,
            potential_j: -1.0 / 3.0,
        },
    ];
    write_diagnostics(&path, &diags).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("iter,purity_gap_max,potential_J"));
    assert_eq!(read_diagnostics(&path).unwrap(), diags);
}

#[test]
fn report_json_reparses() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run(Command::SingleVertex, &opts(tmp.path())).unwrap();
    let back: RunReport = read_json(&tmp.path().join("report.json")).unwrap();
    assert_eq!(back, report);
    let timing: serde_json::Value = read_json(&tmp.path().join("timing.json")).unwrap();
    assert!(timing["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(!std::fs::read_to_string(tmp.path().join("report.json")).unwrap().contains("wall"));
}

#[test]
fn single_vertex_density_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run(Command::SingleVertex, &opts(tmp.path())).unwrap();
    assert!(report.converged);
    assert!(report.details["limit_distance"].as_f64().unwrap() <= 1e-3);
    let state: MatrixFile = read_json(&tmp.path().join("final_state.json")).unwrap();
    assert!(state.re[0][0] > 0.99);
    let traj = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("iter,purity_gap,lambda_1,lambda_2"));
}

#[test]
fn single_vertex_random_basis_and_matrix_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Options {
        eigenvalues: Some(vec![0.3, 1.0, 2.0]),
        basis: Some(Basis::Random),
        seed: Some(3),
        ..opts(tmp.path())
    };
    let report = run(Command::SingleVertex, &o).unwrap();
    assert!(report.details["limit_distance"].as_f64().unwrap() <= 1e-3);

    let file = tmp.path().join("d.json");
    write_json(
        &file,
        &MatrixFile {
            re: vec![vec![2.0, 0.0], vec![0.0, 1.0]],
            im: Some(vec![vec![0.0, 0.5], vec![-0.5, 0.0]]),
        },
    )
    .unwrap();
    let o = Options {
        matrix: Some(file),
        ..opts(&tmp.path().join("m"))
    };
    let report = run(Command::SingleVertex, &o).unwrap();
    assert!(report.converged);
    assert!(report.details["limit_distance"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn single_vertex_classical_and_ties() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Options {
        mode: Some(VertexMode::Classical),
        eigenvalues: Some(vec![0.2, 0.9, 0.5]),
        ..opts(tmp.path())
    };
    let report = run(Command::SingleVertex, &o).unwrap();
    let p: Vec<f64> = serde_json::from_value(report.details["final_probabilities"].clone()).unwrap();
    assert!(p[0] > 0.99);

    let o = Options {
        mode: Some(VertexMode::Classical),
        eigenvalues: Some(vec![1.0, 0.0, 0.0]),
        ..opts(&tmp.path().join("tie"))
    };
    let report = run(Command::SingleVertex, &o).unwrap();
    assert!(report.converged);
    assert_eq!(report.details["limit_multiplicity"], 2);
    assert!(report.details["limit_distance"].as_f64().unwrap() <= 1e-3);

    let o = Options {
        eigenvalues: Some(vec![0.0, 0.0, 1.0]),
        ..opts(&tmp.path().join("dtie"))
    };
    let report = run(Command::SingleVertex, &o).unwrap();
    assert!(report.converged);
    assert!(report.details["limit_distance"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn restrict_check_identity_basis_and_negative_control() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Options {
        basis: Some(Basis::Identity),
        steps: Some(200),
        ..opts(tmp.path())
    };
    let report = run(Command::RestrictCheck, &o).unwrap();
    assert!(report.details["max_deviation"].as_f64().unwrap() <= 1e-10);

    let o = Options {
        noncommuting: true,
        steps: Some(50),
        ..opts(&tmp.path().join("nc"))
    };
    let report = run(Command::RestrictCheck, &o).unwrap();
    assert!(report.details["max_deviation"].as_f64().unwrap() > 1e-2);
    assert!(report.converged);
}

#[test]
fn bloch_constant_image_purifies_along_its_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.ppm");
    write_rgb(&input, &RgbImage::from_pixel(6, 5, Rgb([200, 90, 140]))).unwrap();
    let o = Options {
        input: Some(input),
        ..opts(tmp.path())
    };
    let report = run(Command::BlochDenoise, &o).unwrap();
    assert!(report.converged);
    let out = read_rgb(&tmp.path().join("output.png")).unwrap();
    let first = *out.get_pixel(0, 0);
    assert!(out.pixels().all(|p| *p == first));
    let d_in = [200.0, 90.0, 140.0].map(|v: f64| 2.0 * v / 255.0 - 1.0);
    let d_out = first.0.map(|v| 2.0 * f64::from(v) / 255.0 - 1.0);
    let n_in = d_in.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n_out = d_out.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cos = d_in.iter().zip(&d_out).map(|(a, b)| a * b).sum::<f64>() / (n_in * n_out);
    assert!(cos > 0.999);
    assert!(n_out > 0.99);
}

#[test]
fn bloch_noiseless_image_keeps_its_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Options {
        rows: Some(16),
        cols: Some(16),
        noise_sigma: Some(0.0),
        ..opts(tmp.path())
    };
    let report = run(Command::BlochDenoise, &o).unwrap();
    assert!(report.converged);
    assert_eq!(report.details["interior_accuracy"], 1.0);
    let clean = read_rgb(&tmp.path().join("clean.png")).unwrap();
    let palette: Vec<[u8; 3]> = AXIS_PALETTE
        .iter()
        .map(|d| d.map(|x| ((x + 1.0) * 0.5 * 255.0).round() as u8))
        .collect();
    assert!(clean.pixels().all(|p| palette.contains(&p.0)));
}

#[test]
fn patch_single_tile_is_reproduced() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.png");
    let img = RgbImage::from_fn(4, 4, |x, y| {
        let v = (20 + 40 * x + 7 * y * y) as u8;
        Rgb([v, v, v])
    });
    write_rgb(&input, &img).unwrap();
    for encoder in [Encoder::RankOne, Encoder::Fourier] {
        let dir = tmp.path().join(encoder.to_string());
        let o = Options {
            input: Some(input.clone()),
            patch_size: Some(4),
            encoder: Some(encoder),
            ..opts(&dir)
        };
        let report = run(Command::PatchSmooth, &o).unwrap();
        assert!(report.converged, "{encoder}");
        let out = read_rgb(&dir.join("output.png")).unwrap();
        if encoder == Encoder::RankOne {
            for (a, b) in out.pixels().zip(img.pixels()) {
                assert!((i32::from(a.0[0]) - i32::from(b.0[0])).abs() <= 1);
            }
        }
    }
}

#[test]
fn patch_populations_and_constant_tiles() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Options {
        rows: Some(6),
        cols: Some(6),
        patch_size: Some(4),
        adjacency: Some(Adjacency::Knn(6)),
        weights: Some("gaussian:1".parse().unwrap()),
        ..opts(tmp.path())
    };
    let report = run(Command::PatchSmooth, &o).unwrap();
    assert!(report.converged);
    assert!(report.details["max_within_population_distance"].as_f64().unwrap() <= 1e-6);
    assert!(report.details["min_between_population_distance"].as_f64().unwrap() > 1.0);

    let input = tmp.path().join("flat.ppm");
    let img = RgbImage::from_fn(9, 6, |x, _| if x < 3 { Rgb([50, 50, 50]) } else { Rgb([(x * 20) as u8; 3]) });
    write_rgb(&input, &img).unwrap();
    let o = Options {
        input: Some(input),
        patch_size: Some(3),
        ..opts(&tmp.path().join("flat"))
    };
    let report = run(Command::PatchSmooth, &o).unwrap();
    assert_eq!(report.details["skipped_constant_patches"], 2);
}

#[test]
fn potential_trace_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run(Command::PotentialTrace, &opts(tmp.path())).unwrap();
    assert!(report.converged);
    assert_eq!(report.details["increasing_steps"], 0);
    let diags = read_diagnostics(&tmp.path().join("diagnostics.csv")).unwrap();
    assert_eq!(diags.len(), report.iterations + 1);
}

#[test]
fn binary_exit_codes_and_config_layering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a");
    let o = qsaf(&["single-vertex", "--max-iters", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join("report.json").exists());
    let o = qsaf(&["single-vertex", "--max-iters", "2", "--allow-partial", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());

    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"eps": 0.2, "eigenvalues": [3.0, 1.0, 2.0], "max_iters": 2}"#).unwrap();
    let out = tmp.path().join("b");
    let o = qsaf(&[
        "single-vertex",
        "--config",
        cfg.to_str().unwrap(),
        "--max-iters",
        "5000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: RunReport = read_json(&out.join("report.json")).unwrap();
    assert_eq!(report.config["flow"]["step_size"], 0.2);
    assert_eq!(report.config["flow"]["max_iters"], 5000);
    assert_eq!(report.config["eigenvalues"], serde_json::json!([3.0, 1.0, 2.0]));

    let o = qsaf(&["single-vertex", "--weights", "cosine", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    let o = qsaf(&["bloch-denoise", "--input", "/nonexistent.png", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
