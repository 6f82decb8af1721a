//! `tvmin` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 failed check.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tvmin::baselines::{solve_lp, solve_nlasso, LpOptions, NLassoOptions};
use tvmin::bench::{
    exp_compare, exp_sbm, exp_two_cluster, gen_sbm_with, gen_two_cluster_with, rng_for,
    sample_per_cluster, two_cluster_fixture, ExperimentConfig, GeneratorConfig, SbmSweep,
    TwoClusterSweep,
};
use tvmin::flow::{
    check_flow_feasible, dual_objective, dual_to_flow, flow_rows, resolving_check_exact,
    resolving_check_maxflow,
};
use tvmin::io::{self, CsvTable};
use tvmin::solver::{certificate_gap, solve_tvmin, Certificate, SolverOptions};
use tvmin::{EmpiricalGraph, Error, GraphSignal, Partition, TrainingSet};

#[derive(Debug, Parser)]
#[command(
    name = "tvmin",
    version,
    about = "Recover piecewise-constant graph signals from a few labels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the signal on every node from the labeled ones.
    Solve(SolveArgs),
    /// Check whether the labels resolve a partition.
    Verify(VerifyArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Run a seeded experiment and write its CSV table.
    Exp(ExpArgs),
    /// Certify an estimate with a dual vector.
    Cert(CertArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algorithm {
    Tvmin,
    Lp,
    Nlasso,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum, default_value = "tvmin")]
    algorithm: Algorithm,
    /// TV weight for nlasso.
    #[arg(long, default_value_t = 1e-2)]
    lambda: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Stop once the certified gap is at most this; 0 disables the test.
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    /// Estimate CSV (`node,estimate`); standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration trace CSV (tvmin only).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Final dual CSV (`head,tail,dual`; tvmin only).
    #[arg(long)]
    dual: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// Also enumerate every boundary sign pattern.
    #[arg(long)]
    exact: bool,
    /// Report CSV (`cluster,rho,required,pass`).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// Two Erdős–Rényi clusters joined by random cross edges.
    TwoCluster {
        #[arg(long, default_value_t = 100)]
        n_per_cluster: usize,
        #[arg(long, default_value_t = 0.1)]
        p_edge: f64,
        #[arg(long, default_value_t = 5)]
        n_cross: usize,
        #[arg(long, default_value_t = 1)]
        labels_per_cluster: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, -0.1])]
        amplitudes: Vec<f64>,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Stochastic block model.
    Sbm {
        #[arg(long, value_delimiter = ',', default_values_t = [10, 10, 10])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        p_in: f64,
        #[arg(long, default_value_t = 0.05)]
        p_out: f64,
        #[arg(long, default_value_t = 5)]
        labels_per_cluster: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [-1.0, 0.0, 1.0])]
        amplitudes: Vec<f64>,
        #[command(flatten)]
        common: GenCommon,
    },
    /// The fixed 8-node two-cluster instance.
    Toy {
        #[arg(long)]
        out_prefix: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GenCommon {
    #[arg(long)]
    seed: u64,
    /// Writes `<prefix>.graph`, `.labels`, `.partition` and `.signal.csv`.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExpKind {
    TwoCluster,
    Sbm,
    Compare,
}

#[derive(Debug, Args)]
struct ExpArgs {
    #[arg(value_enum)]
    kind: ExpKind,
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the default configuration, or an override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per sweep point, overriding the configuration.
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV; falls back to the configured path, then standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CertArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    dual: PathBuf,
    /// Largest acceptable duality gap.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Flow dump CSV (`head,tail,flow,capacity,saturated`).
    #[arg(long)]
    flow_out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e)
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Gen(a) => generate(a),
        Command::Exp(a) => experiment(a),
        Command::Cert(a) => cert(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_problem(graph: &Path, labels: &Path) -> Result<(EmpiricalGraph, TrainingSet), Failure> {
    let g = io::load_graph(graph)?;
    let t = io::load_labels(labels)?;
    t.validate_for(g.num_nodes())?;
    Ok((g, t))
}

fn emit(table: &CsvTable, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => Ok(table.write(path)?),
        None => {
            print!("{}", table.render());
            Ok(())
        }
    }
}

fn solve(a: SolveArgs) -> Outcome {
    let (g, t) = load_problem(&a.graph, &a.labels)?;
    if a.iters == 0 {
        return Err(Failure::Usage("--iters must be at least 1".into()));
    }
    let tvmin_only = a.trace.is_some() || a.dual.is_some();
    let estimate = match a.algorithm {
        Algorithm::Tvmin => {
            let opts = SolverOptions {
                max_iters: a.iters,
                gap_tol: (a.gap_tol > 0.0).then_some(a.gap_tol),
                record_trace: a.trace.is_some(),
                ..SolverOptions::default()
            };
            let s = solve_tvmin(&g, &t, &opts)?;
            eprintln!(
                "tvmin: {} iterations, stop {:?}, reported {:?}, gap {:.3e}",
                s.trace.iterations,
                s.trace.stop,
                s.chosen,
                s.certificate.value()
            );
            if let Some(path) = &a.trace {
                io::write_trace(path, &s.trace)?;
            }
            if let Some(path) = &a.dual {
                io::write_dual(path, &g, &s.dual)?;
            }
            s.estimate
        }
        _ if tvmin_only => {
            return Err(Failure::Usage(
                "--trace and --dual require --algorithm tvmin".into(),
            ))
        }
        Algorithm::Lp => solve_lp(&g, &t, &LpOptions::default())?,
        Algorithm::Nlasso => {
            let opts = NLassoOptions {
                max_iters: a.iters,
                ..NLassoOptions::new(a.lambda)
            };
            let s = solve_nlasso(&g, &t, &opts)?;
            eprintln!(
                "nlasso: {} iterations, objective {}, gap {:.3e}",
                s.iterations, s.objective, s.gap
            );
            s.estimate
        }
    };
    emit(&io::estimate_table(&estimate), a.out.as_deref())
}

fn verify(a: VerifyArgs) -> Outcome {
    let (g, t) = load_problem(&a.graph, &a.labels)?;
    let p = io::load_partition(&a.partition)?;
    if p.num_nodes() != g.num_nodes() {
        return Err(Failure::Data(Error::SizeMismatch {
            expected: g.num_nodes(),
            actual: p.num_nodes(),
        }));
    }
    let reports = resolving_check_maxflow(&g, &p, &t)?;
    let mut failed = Vec::new();
    for r in &reports {
        println!(
            "cluster {}: rho={} required={} value={} {}",
            r.cluster,
            r.rho,
            r.required,
            r.value,
            if r.pass { "pass" } else { "fail" }
        );
        if !r.pass {
            failed.push(format!("cluster {} ({:?})", r.cluster, r.status));
        }
    }
    if let Some(path) = &a.report {
        io::resolving_table(&reports).write(path)?;
    }
    if a.exact {
        let ok = resolving_check_exact(&g, &p, &t)?;
        println!("exact: {}", if ok { "pass" } else { "fail" });
        if !ok {
            failed.push("exact sign-pattern check".into());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "not resolved: {}",
            failed.join(", ")
        )))
    }
}

fn write_instance(
    prefix: &Path,
    g: &EmpiricalGraph,
    p: &Partition,
    t: &TrainingSet,
    signal: &GraphSignal,
) -> Outcome {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| {
            Failure::Data(Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })
        })?;
    }
    io::write_graph(io::sibling(prefix, "graph"), g)?;
    io::write_labels(io::sibling(prefix, "labels"), t)?;
    io::write_partition(io::sibling(prefix, "partition"), p)?;
    io::write_estimate(io::sibling(prefix, "signal.csv"), signal)?;
    eprintln!(
        "wrote {} nodes, {} edges, {} labels to {}.*",
        g.num_nodes(),
        g.num_edges(),
        t.len(),
        prefix.display()
    );
    Ok(())
}

fn generate(a: GenArgs) -> Outcome {
    let (g, p, amplitudes, per_cluster, common) = match a.kind {
        GenKind::Toy { out_prefix } => {
            let f = two_cluster_fixture();
            return write_instance(&out_prefix, &f.graph, &f.partition, &f.labels, &f.signal);
        }
        GenKind::TwoCluster {
            n_per_cluster,
            p_edge,
            n_cross,
            labels_per_cluster,
            amplitudes,
            common,
        } => {
            let mut rng = rng_for(common.seed, 0);
            let (g, p) = gen_two_cluster_with(&mut rng, n_per_cluster, p_edge, n_cross)?;
            (g, p, (amplitudes, rng), labels_per_cluster, common)
        }
        GenKind::Sbm {
            sizes,
            p_in,
            p_out,
            labels_per_cluster,
            amplitudes,
            common,
        } => {
            let mut rng = rng_for(common.seed, 0);
            let (g, p) = gen_sbm_with(&mut rng, &sizes, p_in, p_out)?;
            (g, p, (amplitudes, rng), labels_per_cluster, common)
        }
    };
    let (amplitudes, mut rng) = amplitudes;
    if amplitudes.len() != p.num_clusters() {
        return Err(Failure::Usage(format!(
            "--amplitudes needs {} values, got {}",
            p.num_clusters(),
            amplitudes.len()
        )));
    }
    let signal = g.piecewise_constant_signal(&p, &amplitudes)?;
    let nodes = sample_per_cluster(&mut rng, &p, per_cluster)?;
    let t = TrainingSet::sample(&signal, &nodes)?;
    write_instance(&common.out_prefix, &g, &p, &t, &signal)
}

fn experiment(a: ExpArgs) -> Outcome {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::Data(Error::Io {
                    path: path.clone(),
                    source: e,
                })
            })?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| {
                Failure::Data(Error::Parse {
                    path: path.clone(),
                    line: e.line(),
                    message: e.to_string(),
                })
            })?
        }
        None => {
            let seed = a
                .seed
                .ok_or_else(|| Failure::Usage("--seed is required without --config".into()))?;
            let generator = match a.kind {
                ExpKind::Sbm => GeneratorConfig::Sbm(SbmSweep::default()),
                _ => GeneratorConfig::TwoCluster(TwoClusterSweep::default()),
            };
            let trials = match a.kind {
                ExpKind::Sbm => 100,
                _ => 10,
            };
            ExperimentConfig::new(seed, trials, generator)
        }
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = a.trials {
        cfg.trials = trials;
    }
    let table = match (a.kind, &cfg.generator) {
        (ExpKind::TwoCluster, GeneratorConfig::TwoCluster(_)) => {
            let r = exp_two_cluster(&cfg)?;
            for b in &r.buckets {
                eprintln!(
                    "rho in [{}, {}): {} trials, mean nmse {}",
                    b.lower, b.upper, b.count, b.mean_nmse
                );
            }
            r.table
        }
        (ExpKind::Sbm, GeneratorConfig::Sbm(_)) => exp_sbm(&cfg)?.table,
        (ExpKind::Compare, _) => exp_compare(&cfg)?.table,
        (kind, _) => {
            return Err(Failure::Usage(format!(
                "configuration generator does not match experiment {kind:?}"
            )))
        }
    };
    emit(&table, a.out.as_deref().or(cfg.output.as_deref()))
}

fn cert(a: CertArgs) -> Outcome {
    let (g, t) = load_problem(&a.graph, &a.labels)?;
    let x = io::read_estimate(&a.estimate)?;
    let y = io::read_dual(&a.dual, &g)?;
    if x.len() != g.num_nodes() {
        return Err(Failure::Data(Error::SizeMismatch {
            expected: g.num_nodes(),
            actual: x.len(),
        }));
    }
    let tv = g.tv_norm(&x)?;
    println!("tv: {tv}");
    let flow = dual_to_flow(&g, &y)?;
    if let Some(path) = &a.flow_out {
        io::flow_table(&flow_rows(&g, &flow, 1e-9)?).write(path)?;
    }
    let all: Vec<usize> = (0..g.num_edges()).collect();
    let report = check_flow_feasible(&g, &flow, &t, &all, 1e-9 * g.max_degree().max(1.0))?;
    if report.is_feasible() {
        println!(
            "dual objective: {}",
            dual_objective(&g, &t, &flow, 1e-9 * g.max_degree().max(1.0))?
        );
    } else {
        println!("flow: {}", report.summary());
    }
    match certificate_gap(&g, &t, &x, &y)? {
        Certificate::Gap(gap) => {
            println!("gap: {gap}");
            if gap <= a.tol {
                Ok(())
            } else {
                Err(Failure::Check(format!("gap {gap} exceeds {}", a.tol)))
            }
        }
        Certificate::Infeasible(why) => Err(Failure::Check(format!("infeasible pair: {why:?}"))),
    }
}
