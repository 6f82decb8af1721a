//! Text loaders for graphs, labels and partitions, and CSV readers and
//! writers for estimates, duals, traces, flow dumps and experiment tables.
//!
//! Input files are whitespace separated with `#` comments. Graph files hold
//! one edge `u v w` per line, label files `i value`, partition files
//! `i cluster`. Node ids are 0-based and must be contiguous.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::{ClusterReport, FlowRow};
use crate::graph::{EdgeVector, EmpiricalGraph, GraphSignal, Partition, TrainingSet};
use crate::solver::SolverTrace;

/// Shortest round-trip text for `v`, switching to exponent notation for
/// very small or very large magnitudes.
pub fn real(v: f64) -> String {
    format!("{v:?}")
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_error(origin: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-empty, comment-stripped lines with their 1-based line numbers, each
/// split into exactly `fields` whitespace-separated tokens.
fn records<'a>(
    text: &'a str,
    origin: &'a Path,
    fields: usize,
) -> impl Iterator<Item = Result<(usize, Vec<&'a str>)>> + 'a {
    text.lines().enumerate().filter_map(move |(idx, raw)| {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            return None;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.len() != fields {
            return Some(Err(parse_error(
                origin,
                line,
                format!("expected {fields} fields, found {}", tokens.len()),
            )));
        }
        Some(Ok((line, tokens)))
    })
}

fn parse_node(token: &str, origin: &Path, line: usize) -> Result<usize> {
    token
        .parse()
        .map_err(|_| parse_error(origin, line, format!("invalid node id {token:?}")))
}

fn parse_real(token: &str, origin: &Path, line: usize) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_error(
            origin,
            line,
            format!("invalid number {token:?}"),
        )),
    }
}

/// Parses graph text; `origin` is used in error messages.
pub fn parse_graph(text: &str, origin: &Path) -> Result<EmpiricalGraph> {
    let mut edges = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut max_node = None;
    for record in records(text, origin, 3) {
        let (line, tok) = record?;
        let u = parse_node(tok[0], origin, line)?;
        let v = parse_node(tok[1], origin, line)?;
        let w = parse_real(tok[2], origin, line)?;
        if u == v {
            return Err(parse_error(origin, line, format!("self-loop at node {u}")));
        }
        if w <= 0.0 {
            return Err(parse_error(
                origin,
                line,
                format!("non-positive weight {w}"),
            ));
        }
        let key = (u.min(v), u.max(v));
        if let Some(first) = seen.insert(key, line) {
            return Err(parse_error(
                origin,
                line,
                format!(
                    "duplicate edge {{{},{}}} (first on line {first})",
                    key.0, key.1
                ),
            ));
        }
        max_node = max_node.max(Some(key.1));
        edges.push((u, v, w));
    }
    let Some(max_node) = max_node else {
        return Err(parse_error(origin, 0, "no edges"));
    };
    let mut touched = vec![false; max_node + 1];
    for &(u, v, _) in &edges {
        touched[u] = true;
        touched[v] = true;
    }
    if let Some(gap) = touched.iter().position(|&t| !t) {
        return Err(parse_error(
            origin,
            0,
            format!("node ids are not contiguous: node {gap} has no edge"),
        ));
    }
    EmpiricalGraph::new(max_node + 1, edges)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<EmpiricalGraph> {
    let path = path.as_ref();
    parse_graph(&read_text(path)?, path)
}

pub fn parse_labels(text: &str, origin: &Path) -> Result<TrainingSet> {
    let mut labels = BTreeMap::new();
    for record in records(text, origin, 2) {
        let (line, tok) = record?;
        let i = parse_node(tok[0], origin, line)?;
        let value = parse_real(tok[1], origin, line)?;
        if labels.insert(i, value).is_some() {
            return Err(parse_error(origin, line, format!("node {i} labeled twice")));
        }
    }
    TrainingSet::new(labels)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<TrainingSet> {
    let path = path.as_ref();
    parse_labels(&read_text(path)?, path)
}

pub fn parse_partition(text: &str, origin: &Path) -> Result<Partition> {
    let mut assigned: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for record in records(text, origin, 2) {
        let (line, tok) = record?;
        let i = parse_node(tok[0], origin, line)?;
        let cluster = tok[1]
            .parse::<usize>()
            .map_err(|_| parse_error(origin, line, format!("invalid cluster id {:?}", tok[1])))?;
        if assigned.insert(i, (cluster, line)).is_some() {
            return Err(parse_error(
                origin,
                line,
                format!("node {i} assigned twice"),
            ));
        }
    }
    let mut cluster_of = Vec::with_capacity(assigned.len());
    for (expected, (node, (cluster, line))) in assigned.into_iter().enumerate() {
        if node != expected {
            return Err(parse_error(
                origin,
                line,
                format!("node ids are not contiguous: node {expected} is missing"),
            ));
        }
        cluster_of.push(cluster);
    }
    if cluster_of.is_empty() {
        return Err(parse_error(origin, 0, "no assignments"));
    }
    Partition::new(cluster_of)
}

pub fn load_partition(path: impl AsRef<Path>) -> Result<Partition> {
    let path = path.as_ref();
    parse_partition(&read_text(path)?, path)
}

pub fn render_graph(g: &EmpiricalGraph) -> String {
    g.edges()
        .iter()
        .map(|e| format!("{} {} {:?}\n", e.head, e.tail, e.weight))
        .collect()
}

pub fn write_graph(path: impl AsRef<Path>, g: &EmpiricalGraph) -> Result<()> {
    write_text(path.as_ref(), &render_graph(g))
}

pub fn render_labels(t: &TrainingSet) -> String {
    t.iter().map(|(i, v)| format!("{i} {v:?}\n")).collect()
}

pub fn write_labels(path: impl AsRef<Path>, t: &TrainingSet) -> Result<()> {
    write_text(path.as_ref(), &render_labels(t))
}

pub fn render_partition(p: &Partition) -> String {
    p.assignments()
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{i} {c}\n"))
        .collect()
}

pub fn write_partition(path: impl AsRef<Path>, p: &Partition) -> Result<()> {
    write_text(path.as_ref(), &render_partition(p))
}

/// In-memory CSV table with optional `# seed=` and `# config=` comment lines
/// ahead of the header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub seed: Option<u64>,
    pub config: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            seed: None,
            config: None,
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, seed: u64, config: impl Into<String>) -> Self {
        self.seed = Some(seed);
        self.config = Some(config.into());
        self
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows
            .push(row.into_iter().map(|c| c.to_string()).collect());
    }

    pub fn render(&self) -> String {
        let mut out = Vec::new();
        if let Some(seed) = self.seed {
            writeln!(out, "# seed={seed}").expect("write to memory");
        }
        if let Some(config) = &self.config {
            writeln!(out, "# config={}", config.replace('\n', " ")).expect("write to memory");
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns).expect("write to memory");
            for row in &self.rows {
                w.write_record(row).expect("write to memory");
            }
            w.flush().expect("write to memory");
        }
        String::from_utf8(out).expect("utf-8 input")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.render())
    }

    /// Parses a table, skipping comment lines except for the provenance
    /// headers, which are restored.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut seed = None;
        let mut config = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some(s) = line.strip_prefix("# seed=") {
                seed = s.trim().parse().ok();
            } else if let Some(c) = line.strip_prefix("# config=") {
                config = Some(c.to_string());
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let csv_err = |e: csv::Error| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(origin, line, e.to_string())
        };
        let columns = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(
                record
                    .map_err(csv_err)?
                    .iter()
                    .map(str::to_string)
                    .collect(),
            );
        }
        Ok(Self {
            seed,
            config,
            columns,
            rows,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, path)
    }

    fn expect_columns(&self, expected: &[&str], origin: &Path) -> Result<()> {
        if self
            .columns
            .iter()
            .map(String::as_str)
            .eq(expected.iter().copied())
        {
            Ok(())
        } else {
            Err(parse_error(
                origin,
                1,
                format!(
                    "expected header {}, found {}",
                    expected.join(","),
                    self.columns.join(",")
                ),
            ))
        }
    }
}

/// CSV `node,estimate`.
pub fn estimate_table(x: &GraphSignal) -> CsvTable {
    let mut t = CsvTable::new(["node", "estimate"]);
    for (i, v) in x.iter().enumerate() {
        t.push([i.to_string(), real(*v)]);
    }
    t
}

pub fn write_estimate(path: impl AsRef<Path>, x: &GraphSignal) -> Result<()> {
    estimate_table(x).write(path)
}

/// Reads `node,estimate`; every node from 0 to the largest id must appear
/// exactly once.
pub fn read_estimate(path: impl AsRef<Path>) -> Result<GraphSignal> {
    let path = path.as_ref();
    let table = CsvTable::read(path)?;
    table.expect_columns(&["node", "estimate"], path)?;
    let mut values: BTreeMap<usize, f64> = BTreeMap::new();
    for (row_idx, row) in table.rows.iter().enumerate() {
        let line = row_idx + 2;
        let i = parse_node(&row[0], path, line)?;
        let v = parse_real(&row[1], path, line)?;
        if values.insert(i, v).is_some() {
            return Err(parse_error(path, line, format!("node {i} listed twice")));
        }
    }
    for (expected, &node) in values.keys().enumerate() {
        if node != expected {
            return Err(parse_error(path, 0, format!("node {expected} is missing")));
        }
    }
    GraphSignal::new(values.into_values().collect())
}

/// CSV `head,tail,dual` in canonical edge order.
pub fn dual_table(g: &EmpiricalGraph, y: &EdgeVector) -> Result<CsvTable> {
    crate::error::check_len(g.num_edges(), y.len())?;
    let mut t = CsvTable::new(["head", "tail", "dual"]);
    for (e, v) in g.edges().iter().zip(y.iter()) {
        t.push([e.head.to_string(), e.tail.to_string(), real(*v)]);
    }
    Ok(t)
}

pub fn write_dual(path: impl AsRef<Path>, g: &EmpiricalGraph, y: &EdgeVector) -> Result<()> {
    dual_table(g, y)?.write(path)
}

/// Reads `head,tail,dual` against `g`. Rows listed as `tail,head` are
/// accepted with the sign flipped; every edge must appear exactly once.
pub fn read_dual(path: impl AsRef<Path>, g: &EmpiricalGraph) -> Result<EdgeVector> {
    let path = path.as_ref();
    let table = CsvTable::read(path)?;
    table.expect_columns(&["head", "tail", "dual"], path)?;
    let mut values = vec![None; g.num_edges()];
    for (row_idx, row) in table.rows.iter().enumerate() {
        let line = row_idx + 2;
        let u = parse_node(&row[0], path, line)?;
        let v = parse_node(&row[1], path, line)?;
        let y = parse_real(&row[2], path, line)?;
        let idx = g
            .edge_index(u, v)
            .ok_or_else(|| parse_error(path, line, format!("{{{u},{v}}} is not an edge")))?;
        let signed = if u < v { y } else { -y };
        if values[idx].replace(signed).is_some() {
            return Err(parse_error(
                path,
                line,
                format!("edge {{{u},{v}}} listed twice"),
            ));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(idx, v)| {
            v.ok_or_else(|| {
                let e = g.edge(idx);
                parse_error(
                    path,
                    0,
                    format!("edge {{{},{}}} is missing", e.head, e.tail),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EdgeVector::new(values)
}

/// CSV `k,tv_bar,gap,label_violation`.
pub fn trace_table(trace: &SolverTrace) -> CsvTable {
    let mut t = CsvTable::new(["k", "tv_bar", "gap", "label_violation"]);
    for r in &trace.records {
        t.push([
            r.k.to_string(),
            real(r.tv_bar),
            real(r.gap),
            real(r.label_violation),
        ]);
    }
    t
}

pub fn write_trace(path: impl AsRef<Path>, trace: &SolverTrace) -> Result<()> {
    trace_table(trace).write(path)
}

/// CSV `head,tail,flow,capacity,saturated`.
pub fn flow_table(rows: &[FlowRow]) -> CsvTable {
    let mut t = CsvTable::new(["head", "tail", "flow", "capacity", "saturated"]);
    for r in rows {
        t.push([
            r.head.to_string(),
            r.tail.to_string(),
            real(r.flow),
            real(r.capacity),
            r.saturated.to_string(),
        ]);
    }
    t
}

/// CSV `cluster,rho,required,pass`.
pub fn resolving_table(reports: &[ClusterReport]) -> CsvTable {
    let mut t = CsvTable::new(["cluster", "rho", "required", "pass"]);
    for r in reports {
        t.push([
            r.cluster.to_string(),
            real(r.rho),
            real(r.required),
            r.pass.to_string(),
        ]);
    }
    t
}

/// `<prefix>.<suffix>` next to the prefix path.
pub fn sibling(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}
