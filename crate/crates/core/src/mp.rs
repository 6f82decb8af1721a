//! Node- and edge-local form of the primal-dual solver.
//!
//! Each round runs three bulk-synchronous phases separated by barriers:
//!
//! 1. every node publishes its extrapolated value `x̃_i = 2x_i − x_i^prev`;
//! 2. every edge reads `x̃` at its two endpoints, updates and clips its
//!    multiplier, and publishes `W_e y_e`;
//! 3. every node reads the published values of its incident edges, takes a
//!    primal step, clamps its label and updates its running average.
//!
//! A phase only reads what the previous phase published, so agents within a
//! phase may run in any order or in parallel. Node sums walk incident edges
//! in canonical edge order, which makes sequential and parallel rounds
//! bit-identical.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeVector, EmpiricalGraph, GraphSignal, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Port {
    pub edge: usize,
    pub weight: f64,
    /// The owning node is the head of `edge`.
    pub is_head: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeAgent {
    pub id: usize,
    pub x_prev: f64,
    pub x_cur: f64,
    pub x_bar: f64,
    pub gamma: f64,
    pub label: Option<f64>,
    /// Incident edges in canonical order.
    pub ports: Vec<Port>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAgent {
    pub id: usize,
    pub y: f64,
    pub weight: f64,
    pub head: usize,
    pub tail: usize,
}

/// Which agent's published state was read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentId {
    Node(usize),
    Edge(usize),
}

/// One read of another agent's published state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub reader: AgentId,
    pub source: AgentId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MessageStats {
    pub rounds: usize,
    pub node_to_edge: usize,
    pub edge_to_node: usize,
}

impl MessageStats {
    pub fn total(&self) -> usize {
        self.node_to_edge + self.edge_to_node
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

/// Agents of one graph plus the published values between phases.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<NodeAgent>,
    edges: Vec<EdgeAgent>,
    node_out: Vec<f64>,
    edge_out: Vec<f64>,
    k: usize,
    stats: MessageStats,
    audit: Option<Vec<Access>>,
}

impl Network {
    /// Zero-initialized agents for `g` with labels `t`.
    pub fn new(g: &EmpiricalGraph, t: &TrainingSet) -> Result<Self> {
        t.validate_for(g.num_nodes())?;
        let nodes = (0..g.num_nodes())
            .map(|i| NodeAgent {
                id: i,
                x_prev: 0.0,
                x_cur: 0.0,
                x_bar: 0.0,
                gamma: 1.0 / g.degree(i),
                label: t.get(i),
                ports: g
                    .incident(i)
                    .iter()
                    .map(|inc| Port {
                        edge: inc.edge,
                        weight: g.edge(inc.edge).weight,
                        is_head: inc.is_head,
                    })
                    .collect(),
            })
            .collect();
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .map(|(id, e)| EdgeAgent {
                id,
                y: 0.0,
                weight: e.weight,
                head: e.head,
                tail: e.tail,
            })
            .collect();
        Ok(Self {
            nodes,
            edges,
            node_out: vec![0.0; g.num_nodes()],
            edge_out: vec![0.0; g.num_edges()],
            k: 0,
            stats: MessageStats::default(),
            audit: None,
        })
    }

    /// Records every cross-agent read from now on. Audited rounds run
    /// sequentially.
    pub fn enable_audit(&mut self) {
        self.audit = Some(Vec::new());
    }

    pub fn take_audit(&mut self) -> Vec<Access> {
        self.audit.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn nodes(&self) -> &[NodeAgent] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeAgent] {
        &self.edges
    }

    pub fn rounds(&self) -> usize {
        self.k
    }

    pub fn stats(&self) -> MessageStats {
        self.stats
    }

    pub fn last_iterate(&self) -> GraphSignal {
        GraphSignal::from_raw(self.nodes.iter().map(|n| n.x_cur).collect())
    }

    pub fn previous_iterate(&self) -> GraphSignal {
        GraphSignal::from_raw(self.nodes.iter().map(|n| n.x_prev).collect())
    }

    pub fn running_average(&self) -> GraphSignal {
        GraphSignal::from_raw(self.nodes.iter().map(|n| n.x_bar).collect())
    }

    pub fn dual(&self) -> EdgeVector {
        EdgeVector::from_raw(self.edges.iter().map(|e| e.y).collect())
    }

    /// One synchronous round.
    pub fn round(&mut self, exec: Execution) {
        let exec = if self.audit.is_some() {
            Execution::Sequential
        } else {
            exec
        };

        // Phase 1: nodes publish x̃.
        match exec {
            Execution::Sequential => self
                .node_out
                .iter_mut()
                .zip(&self.nodes)
                .for_each(|(out, n)| *out = extrapolate(n)),
            Execution::Parallel => self
                .node_out
                .par_iter_mut()
                .zip(&self.nodes)
                .for_each(|(out, n)| *out = extrapolate(n)),
        }

        // Phase 2: edges read endpoint values, publish W_e y_e.
        let node_out = &self.node_out;
        match exec {
            Execution::Sequential => self
                .edges
                .iter_mut()
                .zip(self.edge_out.iter_mut())
                .for_each(|(e, out)| *out = edge_update(e, node_out)),
            Execution::Parallel => self
                .edges
                .par_iter_mut()
                .zip(self.edge_out.par_iter_mut())
                .for_each(|(e, out)| *out = edge_update(e, node_out)),
        }
        if let Some(log) = self.audit.as_mut() {
            for e in &self.edges {
                for src in [e.head, e.tail] {
                    log.push(Access {
                        reader: AgentId::Edge(e.id),
                        source: AgentId::Node(src),
                    });
                }
            }
        }

        // Phase 3: nodes read incident edges and step.
        let k = self.k + 1;
        let edge_out = &self.edge_out;
        match exec {
            Execution::Sequential => self
                .nodes
                .iter_mut()
                .for_each(|n| node_update(n, edge_out, k)),
            Execution::Parallel => self
                .nodes
                .par_iter_mut()
                .for_each(|n| node_update(n, edge_out, k)),
        }
        if let Some(log) = self.audit.as_mut() {
            for n in &self.nodes {
                for p in &n.ports {
                    log.push(Access {
                        reader: AgentId::Node(n.id),
                        source: AgentId::Edge(p.edge),
                    });
                }
            }
        }

        self.k = k;
        self.stats.rounds += 1;
        self.stats.node_to_edge += 2 * self.edges.len();
        self.stats.edge_to_node += self.nodes.iter().map(|n| n.ports.len()).sum::<usize>();
    }
}

#[inline]
fn extrapolate(n: &NodeAgent) -> f64 {
    2.0 * n.x_cur - n.x_prev
}

#[inline]
fn edge_update(e: &mut EdgeAgent, node_out: &[f64]) -> f64 {
    let y = e.y + 0.5 * (node_out[e.head] - node_out[e.tail]);
    e.y = y / y.abs().max(1.0);
    e.weight * e.y
}

#[inline]
fn node_update(n: &mut NodeAgent, edge_out: &[f64], k: usize) {
    let mut acc = 0.0;
    for p in &n.ports {
        let flow = edge_out[p.edge];
        acc += if p.is_head { flow } else { -flow };
    }
    let next = match n.label {
        Some(a) => a,
        None => n.x_cur - n.gamma * acc,
    };
    n.x_prev = n.x_cur;
    n.x_cur = next;
    let w = 1.0 / k as f64;
    n.x_bar = (1.0 - w) * n.x_bar + w * n.x_cur;
}

/// Advances `agents` by one round.
pub fn mp_round(agents: &mut Network) {
    agents.round(Execution::Sequential);
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpOutput {
    /// Last iterate, the distributed form's reported labels.
    pub estimate: GraphSignal,
    pub running_average: GraphSignal,
    pub dual: EdgeVector,
    pub stats: MessageStats,
}

/// Runs `rounds` rounds from a zero start.
pub fn mp_run(
    g: &EmpiricalGraph,
    t: &TrainingSet,
    rounds: usize,
    exec: Execution,
) -> Result<MpOutput> {
    if t.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    let mut net = Network::new(g, t)?;
    for _ in 0..rounds {
        net.round(exec);
    }
    Ok(MpOutput {
        estimate: net.last_iterate(),
        running_average: net.running_average(),
        dual: net.dual(),
        stats: net.stats(),
    })
}
