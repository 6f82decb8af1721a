use proptest::prelude::*;
use rand::Rng;
use tvmin::bench::{gen_small_instance, rng_for, two_cluster_fixture};
use tvmin::flow::{
    check_flow_feasible, cut_condition_check, divergence, dual_objective, dual_to_flow, max_flow,
    resolving_check_exact, resolving_check_maxflow, unsaturated_constancy_check, ClusterStatus,
    FlowProblem,
};
use tvmin::solver::{solve_tvmin, SolverOptions};
use tvmin::{EdgeVector, EmpiricalGraph, Partition, TrainingSet};

/// Random small instance with a random partition into `k` non-empty clusters.
fn partitioned(seed: u64, n: usize, k: usize) -> (EmpiricalGraph, Partition, TrainingSet) {
    let mut rng = rng_for(seed, 1);
    let labels = rng.gen_range(1..=n / 2);
    let (g, t) = gen_small_instance(&mut rng, n, 0.3, labels, 2).unwrap();
    let mut cluster: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.gen_range(0..k) })
        .collect();
    cluster.rotate_left(rng.gen_range(0..n));
    (g, Partition::new(cluster).unwrap(), t)
}

/// Minimum over all `s`-`t` cuts by enumeration.
fn brute_force_min_cut(arcs: &[(usize, usize, f64)], n: usize, s: usize, t: usize) -> f64 {
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let side = |v: usize| mask >> v & 1 == 1;
        if !side(s) || side(t) {
            continue;
        }
        let cut: f64 = arcs
            .iter()
            .filter(|a| side(a.0) && !side(a.1))
            .map(|a| a.2)
            .sum();
        best = best.min(cut);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_divergence_equals_dual_transpose(seed in any::<u64>(), n in 2usize..=30) {
        let (g, _) = gen_small_instance(&mut rng_for(seed, 0), n, 0.2, 1, 1).unwrap();
        let mut rng = rng_for(seed, 2);
        let y = EdgeVector::new((0..g.num_edges()).map(|_| rng.gen_range(-1.0..=1.0)).collect()).unwrap();
        let f = dual_to_flow(&g, &y).unwrap();
        let div = divergence(&g, &f).unwrap();
        let dty = g.incidence_transpose_apply(&y).unwrap();
        for i in 0..n {
            prop_assert!((div[i] - dty[i]).abs() <= 1e-12);
        }
        let back = f.to_dual(&g).unwrap();
        for e in 0..g.num_edges() {
            prop_assert!((back[e] - y[e]).abs() <= 1e-12);
        }
    }

    #[test]
    fn maxflow_pass_agrees_with_cut_condition(seed in any::<u64>(), n in 3usize..=12, k in 1usize..=3) {
        let (g, p, t) = partitioned(seed, n, k.min(n));
        let reports = resolving_check_maxflow(&g, &p, &t).unwrap();
        for r in &reports {
            let cut = cut_condition_check(&g, &p, &t, r.cluster).unwrap();
            prop_assert_eq!(r.pass, cut, "cluster {} {:?}", r.cluster, r);
        }
    }

    #[test]
    fn maxflow_pass_implies_exact_pass(seed in any::<u64>(), n in 3usize..=10, k in 1usize..=3) {
        let (g, p, t) = partitioned(seed, n, k.min(n));
        let reports = resolving_check_maxflow(&g, &p, &t).unwrap();
        if g.boundary_edges(&p).unwrap().len() <= 12 && reports.iter().all(|r| r.pass) {
            prop_assert!(resolving_check_exact(&g, &p, &t).unwrap());
        }
    }

    #[test]
    fn dual_objective_matches_tv_at_convergence(seed in any::<u64>(), n in 3usize..=15) {
        let (g, t) = gen_small_instance(&mut rng_for(seed, 3), n, 0.3, 3.min(n), 3).unwrap();
        let opts = SolverOptions { max_iters: 200_000, gap_tol: Some(1e-10), record_trace: false, ..SolverOptions::default() };
        let sol = solve_tvmin(&g, &t, &opts).unwrap();
        let f = dual_to_flow(&g, &sol.dual).unwrap();
        let report = check_flow_feasible(&g, &f, &t, &[], 1e-6).unwrap();
        prop_assert!(report.is_feasible(), "{}", report.summary());
        let dual = dual_objective(&g, &t, &f, 1e-6).unwrap();
        let tv = g.tv_norm(&sol.estimate).unwrap();
        prop_assert!((dual - tv).abs() <= 1e-5, "dual {} tv {}", dual, tv);
    }
}

#[test]
fn both_outcomes_occur_in_random_resolving_checks() {
    let (mut passes, mut fails) = (0, 0);
    for seed in 0..200 {
        let (g, p, t) = partitioned(seed, 8, 2);
        for r in resolving_check_maxflow(&g, &p, &t).unwrap() {
            if r.status == ClusterStatus::Checked {
                if r.pass {
                    passes += 1
                } else {
                    fails += 1
                }
            }
        }
    }
    assert!(passes >= 10 && fails >= 10, "passes {passes} fails {fails}");
}

#[test]
fn max_flow_equals_brute_force_min_cut() {
    let mut rng = rng_for(7, 0);
    for _ in 0..50 {
        let n = rng.gen_range(3..=8);
        let mut problem = FlowProblem::new(n, 0, n - 1);
        let mut arcs = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.gen_bool(0.4) {
                    let c = rng.gen_range(1..=10) as f64 / 2.0;
                    problem.add_arc(u, v, c);
                    arcs.push((u, v, c));
                }
            }
        }
        let result = max_flow(&problem).unwrap();
        let cut = brute_force_min_cut(&arcs, n, 0, n - 1);
        assert!(
            (result.value - cut).abs() <= 1e-9,
            "flow {} cut {}",
            result.value,
            cut
        );
        assert!((result.cut_capacity(&problem) - cut).abs() <= 1e-9);
    }
}

#[test]
fn fixture_flow_is_constant_on_unsaturated_edges() {
    let fx = two_cluster_fixture();
    let opts = SolverOptions {
        max_iters: 20_000,
        gap_tol: Some(1e-12),
        ..SolverOptions::default()
    };
    let sol = solve_tvmin(&fx.graph, &fx.labels, &opts).unwrap();
    let f = dual_to_flow(&fx.graph, &sol.dual).unwrap();
    let violations = unsaturated_constancy_check(&fx.graph, &f, &sol.estimate, 1e-6).unwrap();
    assert!(violations.is_empty(), "{violations:?}");
    let dual = dual_objective(&fx.graph, &fx.labels, &f, 1e-6).unwrap();
    assert!((dual - 0.5).abs() <= 1e-6);
    for r in resolving_check_maxflow(&fx.graph, &fx.partition, &fx.labels).unwrap() {
        assert!(r.pass);
        assert!((r.rho - 2.0).abs() <= 1e-12);
    }
}
