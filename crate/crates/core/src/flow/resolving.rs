//! Verification that a training set resolves a partition: the sufficient
//! max-flow test on augmented cluster subgraphs, its cut form, and the exact
//! sign-pattern enumeration.

use rayon::prelude::*;

use super::maxflow::{max_flow, FlowProblem};
use crate::error::{check_len, Error, Result};
use crate::graph::{EmpiricalGraph, Partition, TrainingSet};

/// Largest partition boundary accepted by [`resolving_check_exact`].
pub const MAX_EXACT_BOUNDARY: usize = 20;
/// Largest cluster accepted by [`cut_condition_check`].
pub const MAX_CUT_CLUSTER: usize = 20;

/// Relative slack when comparing a flow value with its requirement.
const PASS_TOL: f64 = 1e-9;

fn meets(value: f64, required: f64) -> bool {
    value >= required - PASS_TOL * required.max(1.0)
}

/// Undirected edge of an augmented subgraph, in local node ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedEdge {
    pub a: usize,
    pub b: usize,
    pub capacity: f64,
}

/// Cluster `l` plus a sink (local id 0). Intra-cluster edges keep their
/// weight as capacity; every boundary node `i` is joined to the sink with
/// capacity twice its weight towards other clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedClusterGraph {
    pub cluster: usize,
    /// `members[k]` is the original id of local node `k + 1`.
    pub members: Vec<usize>,
    pub edges: Vec<AugmentedEdge>,
    /// Total weight of edges leaving the cluster.
    pub boundary_weight: f64,
    /// True when the cluster has no boundary, so the sink has no edges.
    pub sink_isolated: bool,
}

impl AugmentedClusterGraph {
    pub const SINK: usize = 0;

    /// Cluster nodes plus the sink.
    pub fn num_nodes(&self) -> usize {
        self.members.len() + 1
    }

    /// Original id of a local node, `None` for the sink.
    pub fn original(&self, local: usize) -> Option<usize> {
        local
            .checked_sub(1)
            .and_then(|k| self.members.get(k).copied())
    }

    /// Local id of an original cluster node.
    pub fn local(&self, original: usize) -> Option<usize> {
        self.members.binary_search(&original).ok().map(|k| k + 1)
    }

    /// Edges incident to the sink, as `(local node, capacity)`.
    pub fn sink_edges(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edges
            .iter()
            .filter(|e| e.a == Self::SINK)
            .map(|e| (e.b, e.capacity))
    }

    /// Arc-pair expansion with `source` attached to `sources` by arcs of
    /// capacity exceeding every cut.
    fn flow_problem(&self, sources: &[usize]) -> FlowProblem {
        let source = self.num_nodes();
        let mut p = FlowProblem::new(source + 1, source, Self::SINK);
        let big = self.edges.iter().map(|e| e.capacity).sum::<f64>() + 1.0;
        for e in &self.edges {
            p.add_undirected(e.a, e.b, e.capacity);
        }
        for &s in sources {
            p.add_arc(source, s, big);
        }
        p
    }
}

fn check_cluster(g: &EmpiricalGraph, p: &Partition, cluster: usize) -> Result<()> {
    check_len(g.num_nodes(), p.num_nodes())?;
    if cluster >= p.num_clusters() {
        return Err(Error::InvalidParameter(format!(
            "cluster {cluster} does not exist (partition has {})",
            p.num_clusters()
        )));
    }
    Ok(())
}

pub fn build_augmented_subgraph(
    g: &EmpiricalGraph,
    p: &Partition,
    cluster: usize,
) -> Result<AugmentedClusterGraph> {
    check_cluster(g, p, cluster)?;
    let members = p.members(cluster);
    let mut edges = Vec::new();
    let mut sink_edges = Vec::new();
    let mut boundary_weight = 0.0;
    for (k, &i) in members.iter().enumerate() {
        let mut external = 0.0;
        for inc in g.incident(i) {
            let w = g.edge(inc.edge).weight;
            if p.cluster_of(inc.neighbor) == cluster {
                if inc.is_head {
                    let j = members
                        .binary_search(&inc.neighbor)
                        .expect("cluster member");
                    edges.push(AugmentedEdge {
                        a: k + 1,
                        b: j + 1,
                        capacity: w,
                    });
                }
            } else {
                external += w;
            }
        }
        if external > 0.0 {
            boundary_weight += external;
            sink_edges.push(AugmentedEdge {
                a: AugmentedClusterGraph::SINK,
                b: k + 1,
                capacity: 2.0 * external,
            });
        }
    }
    let sink_isolated = sink_edges.is_empty();
    edges.extend(sink_edges);
    Ok(AugmentedClusterGraph {
        cluster,
        members,
        edges,
        boundary_weight,
        sink_isolated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterStatus {
    /// Max-flow was computed.
    Checked,
    /// No boundary; the requirement is vacuous.
    NoBoundary,
    /// No labeled node inside the cluster.
    NoLabeledNode,
}

/// Max-flow verdict for one cluster. `rho` is the flow value divided by the
/// boundary weight, so a pass means `rho ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterReport {
    pub cluster: usize,
    pub rho: f64,
    pub required: f64,
    pub value: f64,
    pub pass: bool,
    pub status: ClusterStatus,
}

/// Per-cluster max-flow from a super-source over the labeled cluster nodes
/// to the sink of the augmented subgraph. Clusters are checked in parallel.
pub fn resolving_check_maxflow(
    g: &EmpiricalGraph,
    p: &Partition,
    t: &TrainingSet,
) -> Result<Vec<ClusterReport>> {
    check_len(g.num_nodes(), p.num_nodes())?;
    t.validate_for(g.num_nodes())?;
    (0..p.num_clusters())
        .into_par_iter()
        .map(|cluster| {
            let aug = build_augmented_subgraph(g, p, cluster)?;
            let required = 2.0 * aug.boundary_weight;
            if aug.sink_isolated {
                return Ok(ClusterReport {
                    cluster,
                    rho: f64::INFINITY,
                    required: 0.0,
                    value: 0.0,
                    pass: true,
                    status: ClusterStatus::NoBoundary,
                });
            }
            let sources: Vec<usize> = aug
                .members
                .iter()
                .enumerate()
                .filter(|(_, &i)| t.contains(i))
                .map(|(k, _)| k + 1)
                .collect();
            if sources.is_empty() {
                return Ok(ClusterReport {
                    cluster,
                    rho: 0.0,
                    required,
                    value: 0.0,
                    pass: false,
                    status: ClusterStatus::NoLabeledNode,
                });
            }
            let value = max_flow(&aug.flow_problem(&sources))?.value;
            Ok(ClusterReport {
                cluster,
                rho: value / aug.boundary_weight,
                required,
                value,
                pass: meets(value, required),
                status: ClusterStatus::Checked,
            })
        })
        .collect()
}

/// Brute force over every `A ⊆ C_l \ M`: the weight between `A` and the rest
/// of the cluster must be at least twice the weight from `A` to other
/// clusters.
pub fn cut_condition_check(
    g: &EmpiricalGraph,
    p: &Partition,
    t: &TrainingSet,
    cluster: usize,
) -> Result<bool> {
    check_cluster(g, p, cluster)?;
    t.validate_for(g.num_nodes())?;
    let members = p.members(cluster);
    if members.len() > MAX_CUT_CLUSTER {
        return Err(Error::TooLarge(format!(
            "cluster {cluster} has {} nodes; the cut enumeration accepts at most {MAX_CUT_CLUSTER}, \
             use resolving_check_maxflow instead",
            members.len()
        )));
    }
    let free: Vec<usize> = members.into_iter().filter(|&i| !t.contains(i)).collect();
    let mut in_a = vec![false; g.num_nodes()];
    for mask in 1u32..(1u32 << free.len()) {
        for (b, &i) in free.iter().enumerate() {
            in_a[i] = mask >> b & 1 == 1;
        }
        let (mut internal, mut external) = (0.0, 0.0);
        for (b, &i) in free.iter().enumerate() {
            if mask >> b & 1 == 0 {
                continue;
            }
            for inc in g.incident(i) {
                let w = g.edge(inc.edge).weight;
                if p.cluster_of(inc.neighbor) != cluster {
                    external += w;
                } else if !in_a[inc.neighbor] {
                    internal += w;
                }
            }
        }
        if !meets(internal, 2.0 * external) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Decides, for every sign pattern `b` on the partition boundary, whether a
/// flow exists with `f_e = 2 b_e W_e` on boundary edges, `|f_e| ≤ W_e`
/// elsewhere and zero net outflow at unlabeled nodes.
pub fn resolving_check_exact(g: &EmpiricalGraph, p: &Partition, t: &TrainingSet) -> Result<bool> {
    t.validate_for(g.num_nodes())?;
    let boundary = g.boundary_edges(p)?;
    if boundary.len() > MAX_EXACT_BOUNDARY {
        return Err(Error::TooLarge(format!(
            "partition boundary has {} edges; the exact check accepts at most \
             {MAX_EXACT_BOUNDARY}, use resolving_check_maxflow instead",
            boundary.len()
        )));
    }
    if boundary.is_empty() {
        return Ok(true);
    }
    // Negating a feasible flow handles the negated pattern, so the first
    // boundary edge is fixed to +1.
    let free_signs = boundary.len() - 1;
    let patterns = 1u32 << free_signs;
    let is_boundary = {
        let mut v = vec![false; g.num_edges()];
        for &e in &boundary {
            v[e] = true;
        }
        v
    };
    let all_feasible = (0..patterns).into_par_iter().all(|mask| {
        let signs: Vec<f64> = std::iter::once(1.0)
            .chain((0..free_signs).map(|b| if mask >> b & 1 == 1 { -1.0 } else { 1.0 }))
            .collect();
        pattern_feasible(g, t, &boundary, &is_boundary, &signs)
    });
    Ok(all_feasible)
}

fn pattern_feasible(
    g: &EmpiricalGraph,
    t: &TrainingSet,
    boundary: &[usize],
    is_boundary: &[bool],
    signs: &[f64],
) -> bool {
    let n = g.num_nodes();
    // Net outflow each node must still emit through non-boundary edges.
    let mut need = vec![0.0; n];
    for (&e, &b) in boundary.iter().zip(signs) {
        let edge = g.edge(e);
        let f = 2.0 * b * edge.weight;
        need[edge.head] -= f;
        need[edge.tail] += f;
    }
    let (slack, source, sink) = (n, n + 1, n + 2);
    let mut p = FlowProblem::new(n + 3, source, sink);
    let mut big = 1.0;
    for (idx, e) in g.edges().iter().enumerate() {
        if !is_boundary[idx] {
            p.add_undirected(e.head, e.tail, e.weight);
            big += e.weight;
        }
    }
    let mut supply_total = 0.0;
    let mut slack_balance = 0.0;
    for (i, &r) in need.iter().enumerate() {
        if t.contains(i) {
            continue;
        }
        big += r.abs();
        slack_balance -= r;
        if r > 0.0 {
            p.add_arc(source, i, r);
            supply_total += r;
        } else if r < 0.0 {
            p.add_arc(i, sink, -r);
        }
    }
    for (i, _) in t.iter() {
        p.add_undirected(slack, i, big);
    }
    // The labeled nodes jointly emit `slack_balance`.
    if slack_balance > 0.0 {
        p.add_arc(source, slack, slack_balance);
        supply_total += slack_balance;
    } else if slack_balance < 0.0 {
        p.add_arc(slack, sink, -slack_balance);
    }
    if supply_total == 0.0 {
        return true;
    }
    match max_flow(&p) {
        Ok(r) => meets(r.value, supply_total),
        Err(_) => false,
    }
}
