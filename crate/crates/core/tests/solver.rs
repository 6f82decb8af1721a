use proptest::prelude::*;
use tvmin::bench::{gen_small_instance, rng_for, tvmin_oracle};
use tvmin::mp::{Execution, Network};
use tvmin::solver::{
    certificate_gap, pd_iterate, solve_tvmin, suboptimality_trace_check, Certificate, OutputRule,
    ScalingFactors, SolverOptions, SolverState, StepRule, DIVERGENCE_TOL,
};
use tvmin::{EmpiricalGraph, GraphSignal, TrainingSet};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn random_instance(
    seed: u64,
    n: usize,
    labels: usize,
    values: usize,
) -> (EmpiricalGraph, TrainingSet) {
    let p_extra = (300.0 / (n * n) as f64).min(0.3);
    gen_small_instance(&mut rng_for(seed, 0), n, p_extra, labels, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn message_passing_tracks_centralized_iterates(
        seed in any::<u64>(),
        n in 2usize..=100,
        parallel in any::<bool>(),
    ) {
        let (g, t) = random_instance(seed, n, 1 + n / 5, 3);
        prop_assert!(g.num_edges() <= 400);
        let scaling = ScalingFactors::new(&g);
        let mut state = SolverState::zeros(&g);
        let mut net = Network::new(&g, &t).unwrap();
        let exec = if parallel { Execution::Parallel } else { Execution::Sequential };
        for _ in 0..200 {
            pd_iterate(&g, &t, &scaling, &mut state).unwrap();
            net.round(exec);
            prop_assert!(max_diff(&state.x_cur, &net.last_iterate()) <= 1e-12);
            prop_assert!(max_diff(&state.x_bar, &net.running_average()) <= 1e-12);
            prop_assert!(max_diff(&state.y, &net.dual()) <= 1e-12);
        }
    }

    #[test]
    fn iterates_respect_labels_and_dual_box(seed in any::<u64>(), n in 2usize..=30) {
        let (g, t) = random_instance(seed, n, 1 + n / 4, 4);
        let scaling = ScalingFactors::new(&g);
        let mut state = SolverState::zeros(&g);
        for _ in 0..50 {
            pd_iterate(&g, &t, &scaling, &mut state).unwrap();
            for (i, a) in t.iter() {
                prop_assert_eq!(state.x_cur[i], a);
            }
            prop_assert!(state.y.norm_inf() <= 1.0);
        }
    }

    #[test]
    fn converged_solution_matches_oracle(seed in any::<u64>(), n in 3usize..=12, labels in 2usize..=4) {
        let (g, t) = random_instance(seed, n, labels.min(n), 3);
        let oracle = tvmin_oracle(&g, &t).unwrap();
        let opts = SolverOptions {
            max_iters: 200_000,
            gap_tol: Some(1e-10),
            record_trace: false,
            ..SolverOptions::default()
        };
        let sol = solve_tvmin(&g, &t, &opts).unwrap();
        let tv = g.tv_norm(&sol.estimate).unwrap();
        prop_assert!((tv - oracle.tv).abs() <= 1e-6, "tv {} oracle {}", tv, oracle.tv);
        let cert = certificate_gap(&g, &t, &oracle.signal, &sol.dual).unwrap();
        prop_assert!(cert.gap().is_some_and(|gap| gap <= 1e-6), "{:?}", cert);
    }
}

#[test]
fn running_average_gap_bounds_suboptimality() {
    for seed in 0..20 {
        let (g, t) = random_instance(seed, 10, 3, 3);
        let oracle = tvmin_oracle(&g, &t).unwrap();
        let opts = SolverOptions {
            max_iters: 3000,
            gap_tol: None,
            output: OutputRule::RunningAverage,
            ..SolverOptions::default()
        };
        let sol = solve_tvmin(&g, &t, &opts).unwrap();
        // A certified dual may leave a divergence of up to the tolerance at
        // unlabeled nodes, which weak duality pays for against |x| ≤ 2.
        let slack = DIVERGENCE_TOL * g.max_degree() * g.num_nodes() as f64 * 2.0;
        for r in &sol.trace.records {
            assert!(
                r.tv_bar - oracle.tv <= r.gap + slack,
                "seed {seed} k {} tv {} oracle {} gap {}",
                r.k,
                r.tv_bar,
                oracle.tv,
                r.gap
            );
            assert!(
                r.tv_bar >= oracle.tv - 1e-9,
                "seed {seed} k {} tv {} oracle {} lv {}",
                r.k,
                r.tv_bar,
                oracle.tv,
                r.label_violation
            );
        }
    }
}

#[test]
fn running_average_suboptimality_decays_like_one_over_k() {
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..10 {
        let (g, t) = random_instance(100 + seed, 10, 4, 3);
        let oracle = tvmin_oracle(&g, &t).unwrap();
        let opts = SolverOptions {
            max_iters: 4000,
            gap_tol: None,
            output: OutputRule::RunningAverage,
            ..SolverOptions::default()
        };
        let sol = solve_tvmin(&g, &t, &opts).unwrap();
        let check = suboptimality_trace_check(&sol.trace, Some(oracle.tv), 100).unwrap();
        let at_100 = check.scaled[0].1.max(1e-9);
        worst_ratio = worst_ratio.max(check.constant / at_100);
    }
    assert!(worst_ratio <= 2.0 + 1e-6, "worst ratio {worst_ratio}");
}

#[test]
fn oracle_signal_is_certified_optimal_by_long_run_dual() {
    let g = EmpiricalGraph::new(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 0.5)]).unwrap();
    let t = TrainingSet::new([(0, 0.0), (2, 1.0)]).unwrap();
    let oracle = tvmin_oracle(&g, &t).unwrap();
    assert_eq!(oracle.tv, 1.5);
    assert_eq!(
        oracle.signal,
        GraphSignal::new(vec![0.0, 1.0, 1.0]).unwrap()
    );
    let sol = solve_tvmin(&g, &t, &SolverOptions::default()).unwrap();
    let cert = certificate_gap(&g, &t, &oracle.signal, &sol.dual).unwrap();
    assert!(matches!(cert, Certificate::Gap(gap) if gap <= 1e-6));
}

#[test]
fn both_step_rules_converge() {
    let fx = tvmin::bench::two_cluster_fixture();
    let mut instances = vec![(fx.graph, fx.labels)];
    instances.extend((0..10).map(|seed| random_instance(200 + seed, 10, 3, 3)));
    for (g, t) in &instances {
        let oracle = tvmin_oracle(g, t).unwrap();
        for steps in [StepRule::Standard, StepRule::HalvedPrimal] {
            let opts = SolverOptions {
                max_iters: 200_000,
                gap_tol: Some(1e-9),
                steps,
                record_trace: false,
                ..SolverOptions::default()
            };
            let sol = solve_tvmin(g, t, &opts).unwrap();
            let tv = g.tv_norm(&sol.estimate).unwrap();
            assert!(
                (tv - oracle.tv).abs() <= 1e-6,
                "{steps:?}: tv {tv} oracle {}",
                oracle.tv
            );
        }
    }
}
