use proptest::prelude::*;
use rand::Rng;
use tvmin::baselines::{
    default_lambda_grid, lp_iterate, lp_objective, nlasso_objective, nlasso_tvmin_consistency,
    solve_lp, solve_nlasso, ConsistencyStatus, LpOptions, NLassoOptions,
};
use tvmin::bench::{gen_small_instance, rng_for, two_cluster_fixture};
use tvmin::solver::{solve_tvmin, SolverOptions};
use tvmin::{EmpiricalGraph, GraphSignal, TrainingSet};

/// Long-run normalized subgradient descent with diminishing steps; returns
/// the best objective seen.
fn subgradient_oracle(g: &EmpiricalGraph, t: &TrainingSet, lambda: f64, iters: usize) -> f64 {
    let n = g.num_nodes();
    let mut x = vec![0.0; n];
    let mut best = f64::INFINITY;
    for k in 0..iters {
        let sig = GraphSignal::new(x.clone()).unwrap();
        best = best.min(nlasso_objective(g, t, lambda, &sig).unwrap());
        let mut grad = vec![0.0; n];
        for (i, a) in t.iter() {
            grad[i] += 2.0 * (x[i] - a);
        }
        for e in g.edges() {
            let s = lambda * e.weight * tvmin::graph::sign(x[e.head] - x[e.tail]);
            grad[e.head] += s;
            grad[e.tail] -= s;
        }
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let step = 0.2 / (norm * ((k + 1) as f64).sqrt());
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= step * gi;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_solution_is_harmonic_and_minimal(seed in any::<u64>(), n in 3usize..=40) {
        let mut rng = rng_for(seed, 0);
        let labels = rng.gen_range(1..=n / 2 + 1);
        let (g, t) = gen_small_instance(&mut rng, n, 0.15, labels, 3).unwrap();
        let x = solve_lp(&g, &t, &LpOptions::default()).unwrap();
        for (i, a) in t.iter() {
            prop_assert_eq!(x[i], a);
        }
        for i in (0..n).filter(|&i| !t.contains(i)) {
            let (mut num, mut den) = (0.0, 0.0);
            for inc in g.incident(i) {
                let e = g.edge(inc.edge);
                let j = if e.head == i { e.tail } else { e.head };
                num += e.weight * e.weight * x[j];
                den += e.weight * e.weight;
            }
            prop_assert!((x[i] - num / den).abs() <= 1e-8, "node {}", i);
        }
        let tv = solve_tvmin(&g, &t, &SolverOptions { record_trace: false, ..SolverOptions::default() }).unwrap();
        prop_assert!(lp_objective(&g, &x).unwrap() <= lp_objective(&g, &tv.estimate).unwrap() + 1e-9);
    }

    #[test]
    fn lp_sweeps_approach_converged_solution(seed in any::<u64>(), n in 3usize..=15) {
        let (g, t) = gen_small_instance(&mut rng_for(seed, 1), n, 0.3, 2, 3).unwrap();
        let exact = solve_lp(&g, &t, &LpOptions::default()).unwrap();
        let swept = lp_iterate(&g, &t, 20_000).unwrap();
        for i in 0..n {
            prop_assert!((exact[i] - swept[i]).abs() <= 1e-6);
        }
    }

    #[test]
    fn nlasso_shrinks_monotonically(seed in any::<u64>(), n in 2usize..=8) {
        let (g, t) = gen_small_instance(&mut rng_for(seed, 2), n, 0.3, n.min(3), 3).unwrap();
        let mut prev_tv = f64::INFINITY;
        for lambda in [0.01, 0.1, 1.0, 10.0] {
            let sol = solve_nlasso(&g, &t, &NLassoOptions::new(lambda)).unwrap();
            let tv = g.tv_norm(&sol.estimate).unwrap();
            prop_assert!(tv <= prev_tv + 1e-5, "lambda {} tv {} prev {}", lambda, tv, prev_tv);
            prev_tv = tv;
        }
    }
}

#[test]
fn nlasso_matches_subgradient_oracle() {
    for seed in 0..10 {
        let (g, t) = gen_small_instance(&mut rng_for(seed, 3), 5, 0.4, 3, 3).unwrap();
        for lambda in [0.1, 0.5, 2.0] {
            let sol = solve_nlasso(&g, &t, &NLassoOptions::new(lambda)).unwrap();
            let oracle = subgradient_oracle(&g, &t, lambda, 400_000);
            assert!(
                sol.objective <= oracle + 1e-9,
                "seed {seed} lambda {lambda} obj {} oracle {oracle} gap {} it {}",
                sol.objective,
                sol.gap,
                sol.iterations
            );
            assert!(
                oracle - sol.objective <= 1e-3,
                "seed {seed} lambda {lambda} obj {} oracle {oracle}",
                sol.objective
            );
        }
    }
}

#[test]
fn nlasso_with_large_lambda_returns_label_mean() {
    let g = EmpiricalGraph::new(
        5,
        [
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 3, 0.5),
            (3, 4, 2.0),
            (0, 4, 1.0),
        ],
    )
    .unwrap();
    let t = TrainingSet::new([(0, 1.0), (2, 3.0), (4, -1.0)]).unwrap();
    let sol = solve_nlasso(&g, &t, &NLassoOptions::new(100.0)).unwrap();
    for i in 0..5 {
        assert!(
            (sol.estimate[i] - 1.0).abs() <= 1e-5,
            "node {i}: {}",
            sol.estimate[i]
        );
    }
}

#[test]
fn nlasso_reproduces_tvmin_on_fixture() {
    let fx = two_cluster_fixture();
    let report =
        nlasso_tvmin_consistency(&fx.graph, &fx.labels, &default_lambda_grid(), 1e-3).unwrap();
    match report.status {
        ConsistencyStatus::Found { max_error, .. } => assert!(max_error <= 1e-3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn lp_smooths_across_fixture_boundary() {
    let fx = two_cluster_fixture();
    let x = solve_lp(&fx.graph, &fx.labels, &LpOptions::default()).unwrap();
    assert!(x[3] > 0.01 && x[3] < 0.99);
    assert!(x[4] > 0.01 && x[4] < 0.99);
    let tv = solve_tvmin(&fx.graph, &fx.labels, &SolverOptions::default()).unwrap();
    for i in 0..8 {
        assert!((tv.estimate[i] - fx.signal[i]).abs() <= 1e-5);
    }
}
