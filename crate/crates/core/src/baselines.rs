//! Comparison methods: label propagation (harmonic extension with squared
//! weights) and the network Lasso (quadratic label fidelity plus a TV
//! penalty).

use crate::error::{Error, Result};
use crate::graph::{EdgeVector, EmpiricalGraph, GraphSignal, TrainingSet};
use crate::solver::{
    solve_tvmin, Engine, Fidelity, OutputRule, ScalingFactors, SolverOptions, SolverState,
    DIVERGENCE_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Stop once the residual norm is at most `tol·max(1, ‖b‖)`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

fn check_anchored(g: &EmpiricalGraph, t: &TrainingSet) -> Result<()> {
    let comp = g.components();
    let num_comp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut anchored = vec![false; num_comp];
    for (i, _) in t.iter() {
        anchored[comp[i]] = true;
    }
    match anchored.iter().position(|&a| !a) {
        Some(c) => Err(Error::UnlabeledComponent {
            node: comp
                .iter()
                .position(|&x| x == c)
                .expect("component has a node"),
        }),
        None => Ok(()),
    }
}

/// Minimizer of `Σ W²_{ij} (x_i − x_j)²` subject to the labels, by
/// Jacobi-preconditioned conjugate gradients on the unlabeled block.
pub fn solve_lp(g: &EmpiricalGraph, t: &TrainingSet, opts: &LpOptions) -> Result<GraphSignal> {
    if t.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {}",
            opts.tol
        )));
    }
    t.validate_for(g.num_nodes())?;
    check_anchored(g, t)?;

    let labels = t.dense(g.num_nodes());
    let unlabeled: Vec<usize> = (0..g.num_nodes())
        .filter(|&i| labels[i].is_none())
        .collect();
    let mut slot = vec![usize::MAX; g.num_nodes()];
    for (k, &i) in unlabeled.iter().enumerate() {
        slot[i] = k;
    }
    let mut x: Vec<f64> = labels.iter().map(|l| l.unwrap_or(0.0)).collect();
    if unlabeled.is_empty() {
        return GraphSignal::new(x);
    }

    let w2 = |edge: usize| g.edge(edge).weight.powi(2);
    let m = unlabeled.len();
    let mut diag = vec![0.0; m];
    let mut b = vec![0.0; m];
    for (k, &i) in unlabeled.iter().enumerate() {
        for inc in g.incident(i) {
            let w = w2(inc.edge);
            diag[k] += w;
            if let Some(a) = labels[inc.neighbor] {
                b[k] += w * a;
            }
        }
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        for (k, &i) in unlabeled.iter().enumerate() {
            let mut acc = diag[k] * v[k];
            for inc in g.incident(i) {
                let j = slot[inc.neighbor];
                if j != usize::MAX {
                    acc -= w2(inc.edge) * v[j];
                }
            }
            out[k] = acc;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let threshold = opts.tol * dot(&b, &b).sqrt().max(1.0);
    let mut u = vec![0.0; m];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    while dot(&r, &r).sqrt() > threshold {
        if iterations == opts.max_iters {
            return Err(Error::NotConverged {
                iterations,
                residual: dot(&r, &r).sqrt(),
            });
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..m {
            u[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            z[k] = r[k] / diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
        iterations += 1;
    }
    for (k, &i) in unlabeled.iter().enumerate() {
        x[i] = u[k];
    }
    GraphSignal::new(x)
}

/// `sweeps` Jacobi sweeps of label propagation, starting from zero at the
/// unlabeled nodes: each sweep replaces every unlabeled value by the
/// `W²`-weighted mean of its neighbors.
pub fn lp_iterate(g: &EmpiricalGraph, t: &TrainingSet, sweeps: usize) -> Result<GraphSignal> {
    t.validate_for(g.num_nodes())?;
    let labels = t.dense(g.num_nodes());
    let mut x: Vec<f64> = labels.iter().map(|l| l.unwrap_or(0.0)).collect();
    let mut next = x.clone();
    for _ in 0..sweeps {
        for (i, xn) in next.iter_mut().enumerate() {
            if labels[i].is_some() {
                continue;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for inc in g.incident(i) {
                let w = g.edge(inc.edge).weight.powi(2);
                num += w * x[inc.neighbor];
                den += w;
            }
            *xn = num / den;
        }
        std::mem::swap(&mut x, &mut next);
    }
    GraphSignal::new(x)
}

/// Label-propagation objective `Σ W²_{ij} (x_i − x_j)²`.
pub fn lp_objective(g: &EmpiricalGraph, x: &GraphSignal) -> Result<f64> {
    crate::error::check_len(g.num_nodes(), x.len())?;
    Ok(g.edges()
        .iter()
        .map(|e| (e.weight * (x[e.head] - x[e.tail])).powi(2))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NLassoOptions {
    /// Weight of the TV penalty.
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once the duality gap is at most this. The fidelity is strongly
    /// convex on labeled nodes, so their error is at most `sqrt(tol)`.
    pub tol: f64,
}

impl NLassoOptions {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            max_iters: 20_000,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NLassoSolution {
    pub estimate: GraphSignal,
    /// Dual vector in `[−λ, λ]` per edge.
    pub dual: EdgeVector,
    pub objective: f64,
    /// Duality gap of the estimate; infinite while the dual is infeasible.
    pub gap: f64,
    pub iterations: usize,
}

/// `Σ_{i∈M} (x_i − label_i)² + λ‖x‖_TV`.
pub fn nlasso_objective(
    g: &EmpiricalGraph,
    t: &TrainingSet,
    lambda: f64,
    x: &GraphSignal,
) -> Result<f64> {
    crate::error::check_len(g.num_nodes(), x.len())?;
    t.validate_for(g.num_nodes())?;
    Ok(fidelity(t, x) + lambda * g.tv_of(x))
}

fn fidelity(t: &TrainingSet, x: &[f64]) -> f64 {
    t.iter().map(|(i, a)| (x[i] - a).powi(2)).sum()
}

/// Dual objective `Σ_{i∈M} (v_i a_i − v_i²/4)` with `v = λ Dᵀy` for a dual
/// `y` in the unit box, or `None` when `Dᵀy` does not vanish on unlabeled
/// nodes.
fn nlasso_dual(
    g: &EmpiricalGraph,
    labels: &[Option<f64>],
    lambda: f64,
    dty: &[f64],
) -> Option<f64> {
    let tol = DIVERGENCE_TOL * g.max_degree();
    let mut value = 0.0;
    for (l, &u) in labels.iter().zip(dty) {
        let v = lambda * u;
        match l {
            Some(a) => value += v * a - v * v / 4.0,
            None if u.abs() > tol => return None,
            None => {}
        }
    }
    Some(value)
}

/// Network Lasso by the primal-dual scheme: the dual is clipped to
/// `[−λ, λ]` and labeled nodes take the proximal step of the quadratic
/// fidelity.
/// Reports whichever of the running average and last iterate has the
/// smaller objective.
pub fn solve_nlasso(
    g: &EmpiricalGraph,
    t: &TrainingSet,
    opts: &NLassoOptions,
) -> Result<NLassoSolution> {
    if !(opts.lambda > 0.0 && opts.lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {}",
            opts.lambda
        )));
    }
    if opts.max_iters == 0 {
        return Err(Error::InvalidParameter(
            "max_iters must be at least 1".into(),
        ));
    }
    t.validate_for(g.num_nodes())?;
    let scaling = ScalingFactors::new(g);
    // Dividing the objective by lambda leaves the minimizer unchanged and
    // keeps the dual in the unit box, so the step sizes of the TV-min solver
    // apply unchanged. The dual of the original problem is lambda times it.
    let lambda = opts.lambda;
    let mut engine = Engine::new(
        g,
        t,
        &scaling,
        Fidelity::Quadratic {
            weight: 1.0 / lambda,
        },
    );
    let mut state = SolverState::zeros(g);
    let objective = |x: &[f64]| fidelity(t, x) + lambda * g.tv_of(x);

    for _ in 0..opts.max_iters {
        engine.step(&mut state);
        let Some(dual) = nlasso_dual(g, &engine.labels, lambda, &engine.dty) else {
            continue;
        };
        let primal = objective(&state.x_cur).min(objective(&state.x_bar));
        if primal - dual <= opts.tol {
            break;
        }
    }
    let (obj_last, obj_avg) = (objective(&state.x_cur), objective(&state.x_bar));
    let (estimate, objective) = if obj_last <= obj_avg {
        (state.x_cur, obj_last)
    } else {
        (state.x_bar, obj_avg)
    };
    let gap = nlasso_dual(g, &engine.labels, lambda, &engine.dty)
        .map_or(f64::INFINITY, |d| (objective - d).max(0.0));
    Ok(NLassoSolution {
        estimate,
        dual: EdgeVector::from_raw(state.y.iter().map(|y| lambda * y).collect()),
        objective,
        gap,
        iterations: state.k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConsistencyStatus {
    /// Some `lambda` reproduced the TV-min estimate within the tolerance.
    Found {
        lambda: f64,
        max_error: f64,
    },
    NotFound,
    /// A connected component carries no label, so neither problem pins the
    /// signal there.
    Unanchored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// `(lambda, max |nLasso − TV-min|)` over the sweep.
    pub sweep: Vec<(f64, f64)>,
    pub status: ConsistencyStatus,
}

/// Half-decade grid from 1e-4 to 1e2.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=12)
        .map(|j| 10f64.powf(-4.0 + 0.5 * j as f64))
        .collect()
}

/// Sweeps `lambda` over `grid` and reports whether some value makes the
/// nLasso estimate agree with the TV-min estimate on every node within
/// `tol`.
pub fn nlasso_tvmin_consistency(
    g: &EmpiricalGraph,
    t: &TrainingSet,
    grid: &[f64],
    tol: f64,
) -> Result<ConsistencyReport> {
    if t.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if let Err(Error::UnlabeledComponent { .. }) = check_anchored(g, t) {
        return Ok(ConsistencyReport {
            sweep: Vec::new(),
            status: ConsistencyStatus::Unanchored,
        });
    }
    let opts = SolverOptions {
        max_iters: 50_000,
        gap_tol: Some(1e-10),
        output: OutputRule::Certified,
        record_trace: false,
        ..SolverOptions::default()
    };
    let reference = solve_tvmin(g, t, &opts)?.estimate;
    let mut sweep = Vec::with_capacity(grid.len());
    let mut status = ConsistencyStatus::NotFound;
    for &lambda in grid {
        let x = solve_nlasso(g, t, &NLassoOptions::new(lambda))?.estimate;
        let err = x
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        sweep.push((lambda, err));
        let better = match status {
            ConsistencyStatus::Found { max_error, .. } => err < max_error,
            _ => true,
        };
        if err <= tol && better {
            status = ConsistencyStatus::Found {
                lambda,
                max_error: err,
            };
        }
    }
    Ok(ConsistencyReport { sweep, status })
}
