//! Primal-dual total-variation minimization with duality-gap certificates.
//!
//! The iteration is the diagonally preconditioned primal-dual scheme with
//! `θ = 1`: the dual step clips edge multipliers into `[-1, 1]` and the
//! primal step clamps labeled nodes to their observed values.

use crate::error::{check_len, Error, Result};
use crate::graph::{sign, EdgeVector, EmpiricalGraph, GraphSignal, TrainingSet};

/// `|y_e|` above `1 + DUAL_NORM_TOL` makes `g*` infinite.
pub const DUAL_NORM_TOL: f64 = 1e-12;
/// Relative tolerance, scaled by `d_max`, for `(Dᵀy)_i = 0` at unlabeled nodes.
pub const DIVERGENCE_TOL: f64 = 1e-9;
/// Relative tolerance for a primal candidate to count as label-consistent.
pub const LABEL_TOL: f64 = 1e-9;

/// Per-node primal and per-edge dual step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFactors {
    gamma: Vec<f64>,
    lambda: Vec<f64>,
}

/// Which primal step size to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// `γ_i = 1/d_i`, `λ_e = 1/(2 W_e)`.
    #[default]
    Standard,
    /// `γ_i = 1/(2 d_i)`, `λ_e = 1/(2 W_e)`.
    HalvedPrimal,
}

impl ScalingFactors {
    pub fn new(g: &EmpiricalGraph) -> Self {
        Self::with_rule(g, StepRule::Standard)
    }

    pub fn with_rule(g: &EmpiricalGraph, rule: StepRule) -> Self {
        let scale = match rule {
            StepRule::Standard => 1.0,
            StepRule::HalvedPrimal => 0.5,
        };
        Self {
            gamma: g.degrees().iter().map(|d| scale / d).collect(),
            lambda: g.edges().iter().map(|e| 1.0 / (2.0 * e.weight)).collect(),
        }
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
}

/// Resolvent of the dual `ℓ∞` indicator: entrywise clipping into `[-1, 1]`.
pub fn resolvent_gstar(y: &EdgeVector) -> EdgeVector {
    EdgeVector::from_raw(y.iter().map(|v| v / v.abs().max(1.0)).collect())
}

/// Resolvent of the label constraint: overwrite labeled entries.
pub fn resolvent_h(x: &GraphSignal, t: &TrainingSet) -> Result<GraphSignal> {
    t.validate_for(x.len())?;
    let mut out = x.clone();
    for (i, v) in t.iter() {
        out.as_mut_slice()[i] = v;
    }
    Ok(out)
}

/// Iterates of the primal-dual scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x_prev: GraphSignal,
    pub x_cur: GraphSignal,
    pub y: EdgeVector,
    pub x_bar: GraphSignal,
    pub k: usize,
}

impl SolverState {
    /// All-zero initialization.
    pub fn zeros(g: &EmpiricalGraph) -> Self {
        Self {
            x_prev: GraphSignal::zeros(g.num_nodes()),
            x_cur: GraphSignal::zeros(g.num_nodes()),
            y: EdgeVector::zeros(g.num_edges()),
            x_bar: GraphSignal::zeros(g.num_nodes()),
            k: 0,
        }
    }

    /// Warm start from a primal guess and a dual guess. The primal guess is
    /// used for both `x_prev` and `x_cur`; the dual guess is clipped.
    pub fn warm(g: &EmpiricalGraph, x: &GraphSignal, y: &EdgeVector) -> Result<Self> {
        check_len(g.num_nodes(), x.len())?;
        check_len(g.num_edges(), y.len())?;
        Ok(Self {
            x_prev: x.clone(),
            x_cur: x.clone(),
            y: resolvent_gstar(y),
            x_bar: GraphSignal::zeros(g.num_nodes()),
            k: 0,
        })
    }
}

/// Primal proximal step applied at labeled nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Fidelity {
    /// Hard constraint `x_i = label_i`.
    Clamp,
    /// Quadratic penalty `weight·(x_i - label_i)²`.
    Quadratic { weight: f64 },
}

/// Reusable buffers and problem data for repeated iterations.
pub(crate) struct Engine<'a> {
    pub(crate) g: &'a EmpiricalGraph,
    pub(crate) gamma: Vec<f64>,
    pub(crate) lambda: Vec<f64>,
    pub(crate) labels: Vec<Option<f64>>,
    pub(crate) fidelity: Fidelity,
    x_tilde: Vec<f64>,
    /// `Dᵀy` for the most recent dual iterate.
    pub(crate) dty: Vec<f64>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        g: &'a EmpiricalGraph,
        t: &TrainingSet,
        scaling: &ScalingFactors,
        fidelity: Fidelity,
    ) -> Self {
        Self {
            g,
            gamma: scaling.gamma.clone(),
            lambda: scaling.lambda.clone(),
            labels: t.dense(g.num_nodes()),
            fidelity,
            x_tilde: vec![0.0; g.num_nodes()],
            dty: vec![0.0; g.num_nodes()],
        }
    }

    pub(crate) fn step(&mut self, s: &mut SolverState) {
        let g = self.g;
        for ((xt, &xc), &xp) in self
            .x_tilde
            .iter_mut()
            .zip(s.x_cur.iter())
            .zip(s.x_prev.iter())
        {
            *xt = 2.0 * xc - xp;
        }

        for ((y, e), &lam) in
            s.y.as_mut_slice()
                .iter_mut()
                .zip(g.edges())
                .zip(&self.lambda)
        {
            let v = *y + lam * (e.weight * (self.x_tilde[e.head] - self.x_tilde[e.tail]));
            *y = v.clamp(-1.0, 1.0);
        }

        g.apply_transpose_into(&s.y, &mut self.dty);

        std::mem::swap(&mut s.x_prev, &mut s.x_cur);
        let x_next = s.x_cur.as_mut_slice();
        for (i, xn) in x_next.iter_mut().enumerate() {
            let gamma = self.gamma[i];
            let v = s.x_prev[i] - gamma * self.dty[i];
            *xn = match (self.labels[i], self.fidelity) {
                (None, _) => v,
                (Some(a), Fidelity::Clamp) => a,
                (Some(a), Fidelity::Quadratic { weight }) => {
                    (v + 2.0 * gamma * weight * a) / (1.0 + 2.0 * gamma * weight)
                }
            };
        }

        s.k += 1;
        let w = 1.0 / s.k as f64;
        for (b, &x) in s.x_bar.as_mut_slice().iter_mut().zip(s.x_cur.iter()) {
            *b = (1.0 - w) * *b + w * x;
        }
    }
}

/// One full iteration: extrapolate, dual ascent and clip, primal descent,
/// clamp labels, update the running average.
pub fn pd_iterate(
    g: &EmpiricalGraph,
    t: &TrainingSet,
    scaling: &ScalingFactors,
    state: &mut SolverState,
) -> Result<()> {
    check_len(g.num_nodes(), state.x_cur.len())?;
    check_len(g.num_nodes(), state.x_prev.len())?;
    check_len(g.num_edges(), state.y.len())?;
    t.validate_for(g.num_nodes())?;
    Engine::new(g, t, scaling, Fidelity::Clamp).step(state);
    Ok(())
}

/// Why a candidate primal-dual pair carries no finite certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// `|y_e| > 1`.
    DualNorm { edge: usize, value: f64 },
    /// `(Dᵀy)_i ≠ 0` at an unlabeled node.
    Divergence { node: usize, value: f64 },
    /// The primal candidate disagrees with a label.
    Label { node: usize, value: f64 },
}

/// Outcome of evaluating the duality bound on sub-optimality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certificate {
    Gap(f64),
    Infeasible(Infeasibility),
}

impl Certificate {
    pub fn gap(&self) -> Option<f64> {
        match *self {
            Certificate::Gap(g) => Some(g),
            Certificate::Infeasible(_) => None,
        }
    }

    /// Gap, or `+∞` when infeasible.
    pub fn value(&self) -> f64 {
        self.gap().unwrap_or(f64::INFINITY)
    }
}

pub(crate) fn dual_infeasibility(
    g: &EmpiricalGraph,
    labels: &[Option<f64>],
    y: &[f64],
    dty: &[f64],
) -> Option<Infeasibility> {
    if let Some((edge, &value)) = y
        .iter()
        .enumerate()
        .find(|(_, v)| v.abs() > 1.0 + DUAL_NORM_TOL)
    {
        return Some(Infeasibility::DualNorm { edge, value });
    }
    let tol = DIVERGENCE_TOL * g.max_degree();
    dty.iter()
        .zip(labels)
        .enumerate()
        .find(|(_, (v, l))| l.is_none() && v.abs() > tol)
        .map(|(node, (&value, _))| Infeasibility::Divergence { node, value })
}

pub(crate) fn label_violation(labels: &[Option<f64>], x: &[f64]) -> f64 {
    labels
        .iter()
        .zip(x)
        .filter_map(|(l, &xi)| l.map(|a| (xi - a).abs()))
        .fold(0.0, f64::max)
}

fn label_infeasibility(labels: &[Option<f64>], x: &[f64]) -> Option<Infeasibility> {
    labels
        .iter()
        .zip(x)
        .enumerate()
        .find(|(_, (l, &xi))| matches!(l, Some(a) if (xi - a).abs() > LABEL_TOL * (1.0 + a.abs())))
        .map(|(node, (_, &value))| Infeasibility::Label { node, value })
}

/// `Σ_{i∈M} label_i (Dᵀy)_i`, the dual objective at a feasible `y`.
pub(crate) fn dual_value(labels: &[Option<f64>], dty: &[f64]) -> f64 {
    labels
        .iter()
        .zip(dty)
        .filter_map(|(l, v)| l.map(|a| a * v))
        .sum()
}

fn certificate_from_parts(
    g: &EmpiricalGraph,
    labels: &[Option<f64>],
    x: &[f64],
    y: &[f64],
    dty: &[f64],
) -> Certificate {
    if let Some(bad) = dual_infeasibility(g, labels, y, dty) {
        return Certificate::Infeasible(bad);
    }
    if let Some(bad) = label_infeasibility(labels, x) {
        return Certificate::Infeasible(bad);
    }
    Certificate::Gap((g.tv_of(x) - dual_value(labels, dty)).max(0.0))
}

/// Upper bound `‖x‖_TV + h*(−Dᵀy) + g*(y)` on `‖x‖_TV − min TV`.
pub fn certificate_gap(
    g: &EmpiricalGraph,
    t: &TrainingSet,
    x: &GraphSignal,
    y: &EdgeVector,
) -> Result<Certificate> {
    check_len(g.num_nodes(), x.len())?;
    check_len(g.num_edges(), y.len())?;
    t.validate_for(g.num_nodes())?;
    let labels = t.dense(g.num_nodes());
    let mut dty = vec![0.0; g.num_nodes()];
    g.apply_transpose_into(y, &mut dty);
    Ok(certificate_from_parts(g, &labels, x, y, &dty))
}

/// Which primal iterate `solve_tvmin` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputRule {
    /// Whichever of the running average and the last iterate has the smaller
    /// certified gap; the running average on ties or when neither is
    /// certified.
    #[default]
    Certified,
    RunningAverage,
    LastIterate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop once the reported estimate is certified within this gap.
    pub gap_tol: Option<f64>,
    pub steps: StepRule,
    pub output: OutputRule,
    /// Keep one trace record per iteration.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            gap_tol: Some(1e-6),
            steps: StepRule::Standard,
            output: OutputRule::Certified,
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// TV of the running average.
    pub tv_bar: f64,
    /// Certificate gap of the running average, `+∞` when not certified.
    pub gap: f64,
    /// Largest deviation of the running average from a label.
    pub label_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    GapTolerance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub iterations: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chosen {
    RunningAverage,
    LastIterate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// The reported estimate, selected by [`OutputRule`].
    pub estimate: GraphSignal,
    pub chosen: Chosen,
    pub running_average: GraphSignal,
    pub last_iterate: GraphSignal,
    pub dual: EdgeVector,
    /// Certificate of the reported estimate against `dual`.
    pub certificate: Certificate,
    pub trace: SolverTrace,
}

fn pick(rule: OutputRule, avg: Certificate, last: Certificate) -> Chosen {
    match rule {
        OutputRule::RunningAverage => Chosen::RunningAverage,
        OutputRule::LastIterate => Chosen::LastIterate,
        OutputRule::Certified => {
            if last.value() < avg.value() {
                Chosen::LastIterate
            } else {
                Chosen::RunningAverage
            }
        }
    }
}

/// Minimum-TV signal agreeing with the labels, from an all-zero start.
pub fn solve_tvmin(g: &EmpiricalGraph, t: &TrainingSet, opts: &SolverOptions) -> Result<Solution> {
    solve_tvmin_from(g, t, opts, SolverState::zeros(g))
}

/// As [`solve_tvmin`], continuing from `state`.
pub fn solve_tvmin_from(
    g: &EmpiricalGraph,
    t: &TrainingSet,
    opts: &SolverOptions,
    mut state: SolverState,
) -> Result<Solution> {
    if t.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    t.validate_for(g.num_nodes())?;
    check_len(g.num_nodes(), state.x_cur.len())?;
    check_len(g.num_edges(), state.y.len())?;
    if opts.max_iters == 0 {
        return Err(Error::InvalidParameter(
            "max_iters must be at least 1".into(),
        ));
    }

    let scaling = ScalingFactors::with_rule(g, opts.steps);
    let mut engine = Engine::new(g, t, &scaling, Fidelity::Clamp);
    let mut records = Vec::with_capacity(if opts.record_trace { opts.max_iters } else { 0 });
    let watch = opts.record_trace || opts.gap_tol.is_some();
    let mut stop = StopReason::MaxIterations;

    for _ in 0..opts.max_iters {
        engine.step(&mut state);
        if !watch {
            continue;
        }
        let avg = certificate_from_parts(g, &engine.labels, &state.x_bar, &state.y, &engine.dty);
        if opts.record_trace {
            records.push(TraceRecord {
                k: state.k,
                tv_bar: g.tv_of(&state.x_bar),
                gap: avg.value(),
                label_violation: label_violation(&engine.labels, &state.x_bar),
            });
        }
        if let Some(tol) = opts.gap_tol {
            let reported = match opts.output {
                OutputRule::RunningAverage => avg.value(),
                rule => {
                    let last = certificate_from_parts(
                        g,
                        &engine.labels,
                        &state.x_cur,
                        &state.y,
                        &engine.dty,
                    );
                    match pick(rule, avg, last) {
                        Chosen::RunningAverage => avg.value(),
                        Chosen::LastIterate => last.value(),
                    }
                }
            };
            if reported <= tol {
                stop = StopReason::GapTolerance;
                break;
            }
        }
    }

    let avg = certificate_from_parts(g, &engine.labels, &state.x_bar, &state.y, &engine.dty);
    let last = certificate_from_parts(g, &engine.labels, &state.x_cur, &state.y, &engine.dty);
    let chosen = pick(opts.output, avg, last);
    let (estimate, certificate) = match chosen {
        Chosen::RunningAverage => (state.x_bar.clone(), avg),
        Chosen::LastIterate => (state.x_cur.clone(), last),
    };
    Ok(Solution {
        estimate,
        chosen,
        running_average: state.x_bar,
        last_iterate: state.x_cur,
        dual: state.y,
        certificate,
        trace: SolverTrace {
            records,
            iterations: state.k,
            stop,
        },
    })
}

/// Scaled sub-optimality `K·(TV(x̄^K) − TV_opt)` along a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCheck {
    pub scaled: Vec<(usize, f64)>,
    /// Largest scaled sub-optimality over the records considered.
    pub constant: f64,
    pub argmax: usize,
}

/// Estimates the constant `c` in `TV(x̄^K) − TV_opt ≤ c/K` over records with
/// `k ≥ min_k`.
pub fn suboptimality_trace_check(
    trace: &SolverTrace,
    reference: Option<f64>,
    min_k: usize,
) -> Result<RateCheck> {
    let reference = reference.ok_or(Error::MissingReference)?;
    let scaled: Vec<(usize, f64)> = trace
        .records
        .iter()
        .filter(|r| r.k >= min_k)
        .map(|r| (r.k, r.k as f64 * (r.tv_bar - reference)))
        .collect();
    let (argmax, constant) =
        scaled.iter().copied().fold(
            (0, 0.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    Ok(RateCheck {
        scaled,
        constant,
        argmax,
    })
}

/// Right-hand side of the ergodic rate bound after `k` iterations:
/// `(‖x⁰ − x̂‖²_{Γ⁻¹} + ‖y⁰ − sign(D x̄)‖²_{Λ⁻¹}) / (2k)`.
pub fn ergodic_bound(
    g: &EmpiricalGraph,
    scaling: &ScalingFactors,
    x0: &GraphSignal,
    y0: &EdgeVector,
    x_opt: &GraphSignal,
    x_bar: &GraphSignal,
    k: usize,
) -> Result<f64> {
    check_len(g.num_nodes(), x0.len())?;
    check_len(g.num_nodes(), x_opt.len())?;
    check_len(g.num_edges(), y0.len())?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let primal: f64 = x0
        .iter()
        .zip(x_opt.iter())
        .zip(scaling.gamma())
        .map(|((a, b), gam)| (a - b).powi(2) / gam)
        .sum();
    let dx = g.incidence_apply(x_bar)?;
    let dual: f64 = y0
        .iter()
        .zip(dx.iter())
        .zip(scaling.lambda())
        .map(|((y, d), lam)| (y - sign(*d)).powi(2) / lam)
        .sum();
    Ok((primal + dual) / (2.0 * k as f64))
}
