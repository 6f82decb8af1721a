//! Seeded experiment drivers. Each trial draws from its own generator
//! stream, so results do not depend on scheduling and repeated runs produce
//! identical tables.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gen_sbm_with, gen_two_cluster_with, nmse, rng_for, sample_per_cluster};
use crate::baselines::{lp_iterate, solve_nlasso, NLassoOptions};
use crate::error::{Error, Result};
use crate::flow::{resolving_check_maxflow, sbm_condition};
use crate::graph::{EmpiricalGraph, GraphSignal, Partition, TrainingSet};
use crate::io::{real, CsvTable};
use crate::solver::{solve_tvmin, SolverOptions};

/// Iteration budget of the TV-min solver inside experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub gap_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            gap_tol: Some(1e-6),
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            max_iters: self.max_iters,
            gap_tol: self.gap_tol,
            record_trace: false,
            ..SolverOptions::default()
        }
    }
}

/// Two-cluster sweep over every `(p_edge, n_cross)` pair; trials are
/// bucketed by their mean connectivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoClusterSweep {
    pub n_per_cluster: usize,
    pub p_edge: Vec<f64>,
    pub n_cross: Vec<usize>,
    /// Planted values on the two clusters.
    pub amplitudes: [f64; 2],
    /// Increasing lower edges of the connectivity buckets.
    pub bucket_edges: Vec<f64>,
}

impl Default for TwoClusterSweep {
    fn default() -> Self {
        Self {
            n_per_cluster: 100,
            p_edge: vec![0.1, 0.2],
            n_cross: vec![1, 2, 4, 8, 16, 32, 64, 128],
            amplitudes: [0.1, -0.1],
            bucket_edges: vec![0.0, 0.5, 1.0, 1.5, 2.0],
        }
    }
}

/// Stochastic-block-model sweep over `p_in / p_out` at fixed `p_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmSweep {
    pub cluster_sizes: Vec<usize>,
    pub labels_per_cluster: usize,
    pub p_in: f64,
    pub ratios: Vec<f64>,
    /// Planted value per cluster.
    pub amplitudes: Vec<f64>,
}

impl Default for SbmSweep {
    fn default() -> Self {
        Self {
            cluster_sizes: vec![10, 10, 10],
            labels_per_cluster: 5,
            p_in: 0.5,
            ratios: vec![1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0],
            amplitudes: vec![-1.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorConfig {
    TwoCluster(TwoClusterSweep),
    Sbm(SbmSweep),
}

/// Iteration budgets and nLasso weight for the three-method comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub iterations: Vec<usize>,
    pub lambda: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            iterations: vec![10, 20, 50, 100, 200, 500, 1000, 2000],
            lambda: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Trials per sweep point.
    pub trials: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(seed: u64, trials: usize, generator: GeneratorConfig) -> Self {
        Self {
            seed,
            trials,
            solver: SolverConfig::default(),
            generator,
            compare: CompareConfig::default(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.solver.max_iters == 0 {
            return bad("solver.max_iters must be at least 1".into());
        }
        match &self.generator {
            GeneratorConfig::TwoCluster(s) => {
                if s.p_edge.is_empty() || s.n_cross.is_empty() {
                    return bad("two-cluster sweep needs p_edge and n_cross values".into());
                }
                if s.bucket_edges.is_empty() || s.bucket_edges.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("bucket_edges must be non-empty and increasing".into());
                }
                if s.amplitudes.iter().all(|&a| a == 0.0) {
                    return Err(Error::ZeroSignal);
                }
            }
            GeneratorConfig::Sbm(s) => {
                if s.ratios
                    .iter()
                    .any(|&r| r.is_nan() || r <= 0.0 || s.p_in / r > 1.0)
                {
                    return bad("every ratio must be positive with p_in / ratio ≤ 1".into());
                }
                if s.amplitudes.len() != s.cluster_sizes.len() {
                    return bad("sbm needs one amplitude per cluster".into());
                }
                if s.amplitudes.iter().all(|&a| a == 0.0) {
                    return Err(Error::ZeroSignal);
                }
            }
        }
        if self.compare.iterations.contains(&0)
            || self.compare.lambda.is_nan()
            || self.compare.lambda <= 0.0
        {
            return bad("compare needs positive iteration counts and lambda".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn table<S: Into<String>>(&self, columns: impl IntoIterator<Item = S>) -> CsvTable {
        CsvTable::new(columns).with_provenance(self.seed, self.to_json())
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// Planted signal, training set and graph of one trial.
struct Trial {
    graph: EmpiricalGraph,
    partition: Partition,
    signal: GraphSignal,
    labels: TrainingSet,
}

fn draw_trial(cfg: &ExperimentConfig, stream: u64, point: usize) -> Result<Trial> {
    let mut rng = rng_for(cfg.seed, stream);
    let (graph, partition, amplitudes, per_cluster) = match &cfg.generator {
        GeneratorConfig::TwoCluster(s) => {
            let p_edge = s.p_edge[point / s.n_cross.len()];
            let n_cross = s.n_cross[point % s.n_cross.len()];
            let (g, p) = gen_two_cluster_with(&mut rng, s.n_per_cluster, p_edge, n_cross)?;
            (g, p, s.amplitudes.to_vec(), 1)
        }
        GeneratorConfig::Sbm(s) => {
            let p_out = s.p_in / s.ratios[point];
            let (g, p) = gen_sbm_with(&mut rng, &s.cluster_sizes, s.p_in, p_out)?;
            (g, p, s.amplitudes.clone(), s.labels_per_cluster)
        }
    };
    let signal = graph.piecewise_constant_signal(&partition, &amplitudes)?;
    let nodes = sample_per_cluster(&mut rng, &partition, per_cluster)?;
    let labels = TrainingSet::sample(&signal, &nodes)?;
    Ok(Trial {
        graph,
        partition,
        signal,
        labels,
    })
}

/// Runs `points × trials` trials in parallel, returning results in
/// `(point, trial)` order.
fn run_trials<T: Send>(
    cfg: &ExperimentConfig,
    points: usize,
    run: impl Fn(usize, Trial) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    cfg.validate()?;
    (0..points * cfg.trials)
        .into_par_iter()
        .map(|idx| {
            let point = idx / cfg.trials;
            run(point, draw_trial(cfg, idx as u64, point)?)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoClusterTrial {
    pub p_edge: f64,
    pub n_cross: usize,
    /// Mean over both clusters of `min(ρ, 2)`; a cluster without boundary
    /// counts as 2.
    pub rho_bar: f64,
    pub nmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bucket {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_rho: f64,
    pub mean_nmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoClusterResult {
    pub trials: Vec<TwoClusterTrial>,
    /// Non-empty buckets in increasing order.
    pub buckets: Vec<Bucket>,
    /// CSV `rho,nmse`, one row per non-empty bucket.
    pub table: CsvTable,
}

/// Slack for placing a connectivity exactly on a bucket edge.
const BUCKET_SLACK: f64 = 1e-9;

/// Two-cluster experiment: plant `amplitudes`, label one random node per
/// cluster, measure connectivity by max-flow, solve, and average NMSE per
/// connectivity bucket.
pub fn exp_two_cluster(cfg: &ExperimentConfig) -> Result<TwoClusterResult> {
    let GeneratorConfig::TwoCluster(sweep) = &cfg.generator else {
        return Err(Error::InvalidParameter(
            "config is not a two-cluster sweep".into(),
        ));
    };
    let opts = cfg.solver.options();
    let points = sweep.p_edge.len() * sweep.n_cross.len();
    let trials = run_trials(cfg, points, |point, trial| {
        let reports = resolving_check_maxflow(&trial.graph, &trial.partition, &trial.labels)?;
        let rho_bar = mean(reports.iter().map(|r| r.rho.min(2.0)));
        let estimate = solve_tvmin(&trial.graph, &trial.labels, &opts)?.estimate;
        Ok(TwoClusterTrial {
            p_edge: sweep.p_edge[point / sweep.n_cross.len()],
            n_cross: sweep.n_cross[point % sweep.n_cross.len()],
            rho_bar,
            nmse: nmse(&trial.signal, &estimate)?,
        })
    })?;

    let edges = &sweep.bucket_edges;
    let mut members: Vec<Vec<&TwoClusterTrial>> = vec![Vec::new(); edges.len()];
    for t in &trials {
        let b = edges
            .iter()
            .rposition(|&lo| t.rho_bar >= lo - BUCKET_SLACK)
            .unwrap_or(0);
        members[b].push(t);
    }
    let buckets: Vec<Bucket> = members
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(b, m)| Bucket {
            lower: edges[b],
            upper: edges.get(b + 1).copied().unwrap_or(f64::INFINITY),
            count: m.len(),
            mean_rho: mean(m.iter().map(|t| t.rho_bar)),
            mean_nmse: mean(m.iter().map(|t| t.nmse)),
        })
        .collect();
    let mut table = cfg.table(["rho", "nmse"]);
    for b in &buckets {
        table.push([real(b.mean_rho), real(b.mean_nmse)]);
    }
    Ok(TwoClusterResult {
        trials,
        buckets,
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmRow {
    pub ratio: f64,
    pub nmse: f64,
    /// Smallest per-cluster label-to-boundary margin.
    pub margin: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmResult {
    pub rows: Vec<SbmRow>,
    /// CSV `ratio,nmse,margin`.
    pub table: CsvTable,
}

/// SBM experiment: for every `p_in / p_out` ratio, average the NMSE of
/// TV-min recovery over the trials.
pub fn exp_sbm(cfg: &ExperimentConfig) -> Result<SbmResult> {
    let GeneratorConfig::Sbm(sweep) = &cfg.generator else {
        return Err(Error::InvalidParameter("config is not an sbm sweep".into()));
    };
    let opts = cfg.solver.options();
    let per_trial = run_trials(cfg, sweep.ratios.len(), |_, trial| {
        let estimate = solve_tvmin(&trial.graph, &trial.labels, &opts)?.estimate;
        nmse(&trial.signal, &estimate)
    })?;
    let labeled = vec![sweep.labels_per_cluster; sweep.cluster_sizes.len()];
    let mut rows = Vec::with_capacity(sweep.ratios.len());
    for (point, &ratio) in sweep.ratios.iter().enumerate() {
        let margins = sbm_condition(
            &sweep.cluster_sizes,
            &labeled,
            sweep.p_in,
            sweep.p_in / ratio,
        )?;
        rows.push(SbmRow {
            ratio,
            nmse: mean(
                per_trial[point * cfg.trials..(point + 1) * cfg.trials]
                    .iter()
                    .copied(),
            ),
            margin: margins.into_iter().fold(f64::INFINITY, f64::min),
            trials: cfg.trials,
        });
    }
    let mut table = cfg.table(["ratio", "nmse", "margin"]);
    for r in &rows {
        table.push([real(r.ratio), real(r.nmse), real(r.margin)]);
    }
    Ok(SbmResult { rows, table })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub k: usize,
    pub tvmin: f64,
    pub lp: f64,
    pub nlasso: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareResult {
    pub rows: Vec<CompareRow>,
    /// CSV `k,nmse_tvmin,nmse_lp,nmse_nlasso`.
    pub table: CsvTable,
}

/// Mean NMSE after `k` iterations of TV-min, label propagation (Jacobi
/// sweeps) and nLasso, on instances drawn from the first point of the
/// configured sweep.
pub fn exp_compare(cfg: &ExperimentConfig) -> Result<CompareResult> {
    let ks = &cfg.compare.iterations;
    let per_trial = run_trials(cfg, 1, |_, trial| {
        ks.iter()
            .map(|&k| {
                let opts = SolverOptions {
                    max_iters: k,
                    gap_tol: None,
                    record_trace: false,
                    ..SolverOptions::default()
                };
                let tv = solve_tvmin(&trial.graph, &trial.labels, &opts)?.estimate;
                let lp = lp_iterate(&trial.graph, &trial.labels, k)?;
                let nl_opts = NLassoOptions {
                    lambda: cfg.compare.lambda,
                    max_iters: k,
                    tol: 0.0,
                };
                let nl = solve_nlasso(&trial.graph, &trial.labels, &nl_opts)?.estimate;
                Ok([
                    nmse(&trial.signal, &tv)?,
                    nmse(&trial.signal, &lp)?,
                    nmse(&trial.signal, &nl)?,
                ])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<CompareRow> = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| CompareRow {
            k,
            tvmin: mean(per_trial.iter().map(|t| t[j][0])),
            lp: mean(per_trial.iter().map(|t| t[j][1])),
            nlasso: mean(per_trial.iter().map(|t| t[j][2])),
        })
        .collect();
    let mut table = cfg.table(["k", "nmse_tvmin", "nmse_lp", "nmse_nlasso"]);
    for r in &rows {
        table.push([r.k.to_string(), real(r.tvmin), real(r.lp), real(r.nlasso)]);
    }
    Ok(CompareResult { rows, table })
}
