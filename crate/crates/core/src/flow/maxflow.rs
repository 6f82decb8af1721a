//! Shortest-augmenting-path maximum flow on real capacities.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Residual capacities at or below this are treated as zero.
pub const RESIDUAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowProblem {
    pub num_nodes: usize,
    pub arcs: Vec<Arc>,
    pub source: usize,
    pub sink: usize,
}

impl FlowProblem {
    pub fn new(num_nodes: usize, source: usize, sink: usize) -> Self {
        Self {
            num_nodes,
            arcs: Vec::new(),
            source,
            sink,
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) -> usize {
        self.arcs.push(Arc { from, to, capacity });
        self.arcs.len() - 1
    }

    /// Adds the antiparallel pair `from → to`, `to → from`, both with `capacity`.
    pub fn add_undirected(&mut self, a: usize, b: usize, capacity: f64) {
        self.add_arc(a, b, capacity);
        self.add_arc(b, a, capacity);
    }

    fn validate(&self) -> Result<()> {
        if self.source == self.sink {
            return Err(Error::InvalidParameter("source equals sink".into()));
        }
        for node in [self.source, self.sink] {
            if node >= self.num_nodes {
                return Err(Error::NodeOutOfRange {
                    node,
                    num_nodes: self.num_nodes,
                });
            }
        }
        for a in &self.arcs {
            if a.from >= self.num_nodes || a.to >= self.num_nodes {
                return Err(Error::NodeOutOfRange {
                    node: a.from.max(a.to),
                    num_nodes: self.num_nodes,
                });
            }
            if !(a.capacity.is_finite() && a.capacity >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "arc {}→{} has capacity {}",
                    a.from, a.to, a.capacity
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlowResult {
    pub value: f64,
    /// Flow on each arc of the problem, in input order.
    pub arc_flows: Vec<f64>,
    /// `true` for nodes on the source side of a minimum cut.
    pub source_side: Vec<bool>,
}

impl MaxFlowResult {
    /// Capacity of the arcs leaving the source side.
    pub fn cut_capacity(&self, p: &FlowProblem) -> f64 {
        p.arcs
            .iter()
            .filter(|a| self.source_side[a.from] && !self.source_side[a.to])
            .map(|a| a.capacity)
            .sum()
    }
}

/// Edmonds–Karp. Each input arc gets its own residual twin, so parallel and
/// antiparallel arcs are handled independently.
pub fn max_flow(p: &FlowProblem) -> Result<MaxFlowResult> {
    p.validate()?;
    let n = p.num_nodes;
    // Residual arc 2a is the forward copy of input arc a, 2a+1 its reverse.
    let mut head = Vec::with_capacity(2 * p.arcs.len());
    let mut residual = Vec::with_capacity(2 * p.arcs.len());
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in &p.arcs {
        out[a.from].push(head.len());
        head.push(a.to);
        residual.push(a.capacity);
        out[a.to].push(head.len());
        head.push(a.from);
        residual.push(0.0);
    }

    let mut value = 0.0;
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    loop {
        parent.fill(usize::MAX);
        queue.clear();
        queue.push_back(p.source);
        let mut reached = false;
        'bfs: while let Some(u) = queue.pop_front() {
            for &r in &out[u] {
                let v = head[r];
                if v != p.source && parent[v] == usize::MAX && residual[r] > RESIDUAL_EPS {
                    parent[v] = r;
                    if v == p.sink {
                        reached = true;
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        if !reached {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = p.sink;
        while v != p.source {
            let r = parent[v];
            bottleneck = bottleneck.min(residual[r]);
            v = head[r ^ 1];
        }
        let mut v = p.sink;
        while v != p.source {
            let r = parent[v];
            residual[r] -= bottleneck;
            residual[r ^ 1] += bottleneck;
            v = head[r ^ 1];
        }
        value += bottleneck;
    }

    let mut source_side = vec![false; n];
    source_side[p.source] = true;
    queue.clear();
    queue.push_back(p.source);
    while let Some(u) = queue.pop_front() {
        for &r in &out[u] {
            let v = head[r];
            if !source_side[v] && residual[r] > RESIDUAL_EPS {
                source_side[v] = true;
                queue.push_back(v);
            }
        }
    }

    let arc_flows = (0..p.arcs.len()).map(|a| residual[2 * a + 1]).collect();
    Ok(MaxFlowResult {
        value,
        arc_flows,
        source_side,
    })
}
