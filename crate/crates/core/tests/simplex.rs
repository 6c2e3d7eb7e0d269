use proptest::prelude::*;
use qsaf::simplex::{
    likelihood_simplex, lift_exp_simplex, replicator_simplex, s_flow_integrate, similarity_simplex, single_vertex_af,
    AssignmentMatrix, SFlow, SimplexPoint, SimplexTangent,
};
use qsaf::{FlowConfig, WeightedGraph};
use qsaf_testkit as tk;
use rand::Rng;

fn random_point<R: Rng>(rng: &mut R, c: usize) -> SimplexPoint {
    let v: Vec<f64> = (0..c).map(|_| rng.random_range(-2.0..2.0)).collect();
    SimplexPoint::new(tk::softmax(&v)).unwrap()
}

fn random_vec<R: Rng>(rng: &mut R, c: usize) -> Vec<f64> {
    (0..c).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn replicator_matches_matrix_form() {
    let mut rng = tk::rng(41);
    for c in [2, 3, 6] {
        let p = random_point(&mut rng, c);
        let v = random_vec(&mut rng, c);
        let pr = p.probs();
        let oracle: Vec<f64> = (0..c)
            .map(|i| (0..c).map(|j| ((if i == j { pr[i] } else { 0.0 }) - pr[i] * pr[j]) * v[j]).sum())
            .collect();
        let r = replicator_simplex(&p, &v).unwrap();
        assert!(max_diff(r.values(), &oracle) < 1e-14);
        assert!(r.values().iter().sum::<f64>().abs() < 1e-12);
    }
}

#[test]
fn lift_differential_is_replicator() {
    let mut rng = tk::rng(42);
    for c in [2, 4, 5] {
        let p = random_point(&mut rng, c);
        let v = SimplexTangent::project(&random_vec(&mut rng, c));
        let u = SimplexTangent::project(&random_vec(&mut rng, c));
        let h = 1e-6;
        let at = |s: f64| {
            let w: Vec<f64> = v.values().iter().zip(u.values()).map(|(a, b)| a + s * b).collect();
            lift_exp_simplex(&p, &SimplexTangent::project(&w)).unwrap().probs().to_vec()
        };
        let (plus, minus) = (at(h), at(-h));
        let fd: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let image = lift_exp_simplex(&p, &v).unwrap();
        let r = replicator_simplex(&image, u.values()).unwrap();
        let scale = r.values().iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(max_diff(r.values(), &fd) <= 1e-6 * scale.max(1e-3));
    }
}

#[test]
fn likelihood_is_shift_invariant() {
    let mut rng = tk::rng(43);
    for _ in 0..10 {
        let p = random_point(&mut rng, 4);
        let d = random_vec(&mut rng, 4);
        let alpha = rng.random_range(-50.0..50.0);
        let shifted: Vec<f64> = d.iter().map(|x| x + alpha).collect();
        let a = likelihood_simplex(&p, &d).unwrap();
        let b = likelihood_simplex(&p, &shifted).unwrap();
        assert!(max_diff(a.probs(), b.probs()) < 1e-12);
    }
}

#[test]
fn single_vertex_examples() {
    let cfg = FlowConfig::default();
    let run = single_vertex_af(&[0.2, 0.9, 0.5], &cfg).unwrap();
    assert!(run.converged);
    assert!(run.final_state.probs()[0] > 1.0 - 1e-3);

    let run = single_vertex_af(&[0.2, 0.9, 0.2], &cfg).unwrap();
    assert!(run.converged);
    let p = run.final_state.probs();
    assert!((p[0] - 0.5).abs() < 1e-3 && (p[2] - 0.5).abs() < 1e-3);

    let run = single_vertex_af(&[1.5; 5], &cfg).unwrap();
    assert!(max_diff(run.final_state.probs(), &[0.2; 5]) < 1e-15);
}

/// `Exp_p(v) = p e^(v/p) / <p, e^(v/p)>` and its inverse
/// `R_p log(q/p)`, composed as the Riemannian weighted mean.
fn similarity_by_composition(w: &AssignmentMatrix, d: &[Vec<f64>], g: &WeightedGraph, i: usize) -> Vec<f64> {
    let wi = w.row(i).probs();
    let c = wi.len();
    let mut v = vec![0.0; c];
    for (k, om) in g.neighbors(i) {
        let l = likelihood_simplex(w.row(k), &d[k]).unwrap();
        let ratio: Vec<f64> = l.probs().iter().zip(wi).map(|(a, b)| (a / b).ln()).collect();
        let t = replicator_simplex(w.row(i), &ratio).unwrap();
        for j in 0..c {
            v[j] += om * t.values()[j];
        }
    }
    let e: Vec<f64> = wi.iter().zip(&v).map(|(p, x)| p * (x / p).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[test]
fn similarity_matches_direct_composition() {
    let mut rng = tk::rng(44);
    let n = 6;
    let c = 3;
    let g = tk::random_graph(&mut rng, n, 3);
    let w = AssignmentMatrix::new((0..n).map(|_| random_point(&mut rng, c)).collect()).unwrap();
    let d: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut rng, c)).collect();
    let s = similarity_simplex(&w, &d, &g).unwrap();
    for i in 0..n {
        assert!(max_diff(s.row(i).probs(), &similarity_by_composition(&w, &d, &g, i)) <= 1e-10);
    }
}

#[test]
fn similarity_at_barycenter_with_identical_data() {
    let g = WeightedGraph::grid(3, 3, 1).unwrap();
    let w = AssignmentMatrix::barycenter(9, 3);
    let d = vec![vec![0.3, -0.1, 0.8]; 9];
    let s = similarity_simplex(&w, &d, &g).unwrap();
    let expected = tk::softmax(&[-0.3, 0.1, -0.8]);
    for row in s.rows() {
        assert!(max_diff(row.probs(), &expected) < 1e-14);
    }
}

/// `S' = R_S[Omega S]` on probability vectors.
fn s_flow_rhs(g: &WeightedGraph, c: usize) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |y: &[f64]| {
        let n = g.vertex_count();
        let mut out = vec![0.0; n * c];
        for i in 0..n {
            let mut avg = vec![0.0; c];
            for (k, w) in g.neighbors(i) {
                for j in 0..c {
                    avg[j] += w * y[k * c + j];
                }
            }
            let si = &y[i * c..(i + 1) * c];
            let dot: f64 = si.iter().zip(&avg).map(|(a, b)| a * b).sum();
            for j in 0..c {
                out[i * c + j] = si[j] * (avg[j] - dot);
            }
        }
        out
    }
}

#[test]
fn s_flow_matches_rk4_reference() {
    let g = WeightedGraph::from_raw_weights(vec![vec![0, 1], vec![1, 0]], vec![vec![0.7, 0.3], vec![0.6, 0.4]])
        .unwrap();
    let s0 = AssignmentMatrix::new(vec![
        SimplexPoint::new(vec![0.6, 0.4]).unwrap(),
        SimplexPoint::new(vec![0.3, 0.7]).unwrap(),
    ])
    .unwrap();
    let eps = 1e-4;
    let mut flow = SFlow::new(&g, &s0, eps).unwrap();
    for _ in 0..10_000 {
        flow.step().unwrap();
    }
    let y0: Vec<f64> = s0.rows().iter().flat_map(|r| r.probs().to_vec()).collect();
    let reference = tk::rk4(s_flow_rhs(&g, 2), &y0, 1e-3, 1000);
    let ours: Vec<f64> = flow.state().rows().iter().flat_map(|r| r.probs().to_vec()).collect();
    assert!(max_diff(&ours, &reference) <= 1e-4);
}

#[test]
fn s_flow_self_loops_follow_per_vertex_ode() {
    let g = WeightedGraph::uniform(vec![vec![0]]).unwrap();
    let s0 = AssignmentMatrix::new(vec![SimplexPoint::new(vec![0.25, 0.35, 0.4]).unwrap()]).unwrap();
    let mut flow = SFlow::new(&g, &s0, 1e-3).unwrap();
    for _ in 0..2000 {
        flow.step().unwrap();
    }
    let reference = tk::rk4(s_flow_rhs(&g, 3), s0.row(0).probs(), 1e-3, 2000);
    assert!(max_diff(flow.state().row(0).probs(), &reference) <= 1e-3);
    let run = s_flow_integrate(&s0, &g, &FlowConfig::default()).unwrap();
    assert!(run.final_state.row(0).probs()[2] > 0.999);
}

#[test]
fn constant_rows_stay_identical_on_symmetric_graph() {
    let g = WeightedGraph::torus(3, 3, 1).unwrap();
    let s0 = AssignmentMatrix::new(vec![SimplexPoint::new(vec![0.5, 0.2, 0.3]).unwrap(); 9]).unwrap();
    let run = s_flow_integrate(&s0, &g, &FlowConfig::default()).unwrap();
    for (_, state) in &run.trajectory {
        for row in state.rows() {
            assert!(max_diff(row.probs(), state.row(0).probs()) < 1e-15);
        }
    }
    assert!(run.converged);
}

#[test]
fn trajectory_records_every_step_interval() {
    let g = WeightedGraph::grid(2, 2, 1).unwrap();
    let s0 = AssignmentMatrix::new(vec![
        SimplexPoint::new(vec![0.5, 0.5 - 1e-3, 1e-3]).unwrap(),
        SimplexPoint::new(vec![0.2, 0.5, 0.3]).unwrap(),
        SimplexPoint::new(vec![0.3, 0.3, 0.4]).unwrap(),
        SimplexPoint::new(vec![0.6, 0.2, 0.2]).unwrap(),
    ])
    .unwrap();
    let cfg = FlowConfig {
        record_every: 5,
        ..FlowConfig::default()
    };
    let run = s_flow_integrate(&s0, &g, &cfg).unwrap();
    let iters: Vec<usize> = run.trajectory.iter().map(|(t, _)| *t).collect();
    assert_eq!(iters[0], 0);
    assert!(iters[..iters.len() - 1].iter().all(|t| t % 5 == 0));
    assert_eq!(*iters.last().unwrap(), run.iterations);
    assert_eq!(run.diagnostics.len(), run.iterations + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn replicator_sums_to_zero(seed in any::<u64>(), c in 2usize..9) {
        let mut rng = tk::rng(seed);
        let p = random_point(&mut rng, c);
        let v: Vec<f64> = (0..c).map(|_| rng.random_range(-100.0..100.0)).collect();
        let r = replicator_simplex(&p, &v).unwrap();
        prop_assert!(r.values().iter().sum::<f64>().abs() <= 1e-12 * 100.0);
    }

    #[test]
    fn replicator_is_the_fisher_rao_gradient(seed in any::<u64>(), c in 2usize..7) {
        // f(p) = |p|^2 / 2, metric g_p(u, v) = sum u v / p
        let mut rng = tk::rng(seed);
        let p = random_point(&mut rng, c);
        let u = SimplexTangent::project(&random_vec(&mut rng, c));
        let grad = replicator_simplex(&p, p.probs()).unwrap();
        let g: f64 = grad.values().iter().zip(u.values()).zip(p.probs()).map(|((a, b), pi)| a * b / pi).sum();
        let h = 1e-6;
        let f = |s: f64| p.probs().iter().zip(u.values()).map(|(pi, ui)| (pi + s * ui).powi(2)).sum::<f64>() / 2.0;
        let df = (f(h) - f(-h)) / (2.0 * h);
        prop_assert!((g - df).abs() <= 1e-6);
    }

    #[test]
    fn flow_iterates_stay_inside(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let g = tk::random_graph(&mut rng, 5, 2);
        let s0 = AssignmentMatrix::new((0..5).map(|_| random_point(&mut rng, 3)).collect()).unwrap();
        let mut flow = SFlow::new(&g, &s0, 0.5).unwrap();
        for _ in 0..200 {
            flow.step().unwrap();
            for row in flow.state().rows() {
                prop_assert!(row.probs().iter().all(|&x| x > 0.0));
                prop_assert!((row.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn similarity_is_shift_invariant(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let g = tk::random_graph(&mut rng, 4, 2);
        let w = AssignmentMatrix::new((0..4).map(|_| random_point(&mut rng, 3)).collect()).unwrap();
        let d: Vec<Vec<f64>> = (0..4).map(|_| random_vec(&mut rng, 3)).collect();
        let shifted: Vec<Vec<f64>> = d.iter().map(|r| {
            let a = rng.random_range(-10.0..10.0);
            r.iter().map(|x| x + a).collect()
        }).collect();
        let a = similarity_simplex(&w, &d, &g).unwrap();
        let b = similarity_simplex(&w, &shifted, &g).unwrap();
        for i in 0..4 {
            prop_assert!(max_diff(a.row(i).probs(), b.row(i).probs()) <= 1e-12);
        }
    }
}
