//! Weighted undirected graphs with a canonical edge orientation, graph
//! signals, edge vectors, partitions and training sets.
//!
//! Every edge `{i, j}` is stored once as `(head, tail)` with `head < tail`,
//! and the edge list is sorted lexicographically by `(head, tail)`. All
//! reductions in this crate walk edges in that order so results are
//! bit-reproducible.

use std::collections::BTreeMap;
use std::ops::{Deref, Index};

use crate::error::{check_len, Error, Result};

/// An oriented edge of an [`EmpiricalGraph`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub head: usize,
    pub tail: usize,
    pub weight: f64,
}

/// One entry of a node's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    pub neighbor: usize,
    /// The node is the head (smaller endpoint) of the edge.
    pub is_head: bool,
}

impl Incidence {
    /// Sign of the incidence matrix entry for this node: `+1` at the head,
    /// `-1` at the tail.
    #[inline]
    pub fn sign(&self) -> f64 {
        if self.is_head {
            1.0
        } else {
            -1.0
        }
    }
}

/// Immutable weighted undirected graph without self-loops, multi-edges or
/// isolated nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalGraph {
    num_nodes: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Incidence>>,
    degrees: Vec<f64>,
}

impl EmpiricalGraph {
    /// Builds a graph from undirected weighted edges given in any order and
    /// orientation.
    pub fn new<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if num_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut canon = Vec::new();
        for (u, v, weight) in edges {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::NodeOutOfRange { node, num_nodes });
                }
            }
            if u == v {
                return Err(Error::SelfLoop { node: u });
            }
            let (head, tail) = if u < v { (u, v) } else { (v, u) };
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::InvalidWeight { head, tail, weight });
            }
            canon.push(Edge { head, tail, weight });
        }
        canon.sort_by_key(|e| (e.head, e.tail));
        if let Some(w) = canon
            .windows(2)
            .find(|w| (w[0].head, w[0].tail) == (w[1].head, w[1].tail))
        {
            return Err(Error::DuplicateEdge {
                head: w[0].head,
                tail: w[0].tail,
            });
        }

        let mut adjacency = vec![Vec::new(); num_nodes];
        let mut degrees = vec![0.0; num_nodes];
        for (idx, e) in canon.iter().enumerate() {
            adjacency[e.head].push(Incidence {
                edge: idx,
                neighbor: e.tail,
                is_head: true,
            });
            adjacency[e.tail].push(Incidence {
                edge: idx,
                neighbor: e.head,
                is_head: false,
            });
            degrees[e.head] += e.weight;
            degrees[e.tail] += e.weight;
        }
        if let Some(node) = adjacency.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedNode { node });
        }

        Ok(Self {
            num_nodes,
            edges: canon,
            adjacency,
            degrees,
        })
    }

    /// Builds a graph whose node count is one more than the largest node id.
    pub fn from_edges<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let edges: Vec<_> = edges.into_iter().collect();
        let num_nodes = edges
            .iter()
            .map(|&(u, v, _)| u.max(v) + 1)
            .max()
            .unwrap_or(0);
        Self::new(num_nodes, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    /// Incident edges of `node`, ordered by edge index.
    pub fn incident(&self, node: usize) -> &[Incidence] {
        &self.adjacency[node]
    }

    /// Weighted degree `d_i`.
    pub fn degree(&self, node: usize) -> f64 {
        self.degrees[node]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the edge `{u, v}` in canonical order, if present.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges
            .binary_search_by(|e| (e.head, e.tail).cmp(&key))
            .ok()
    }

    /// Connected component id per node, numbered in order of first node.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.num_nodes {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for inc in &self.adjacency[u] {
                    if comp[inc.neighbor] == usize::MAX {
                        comp[inc.neighbor] = next;
                        stack.push(inc.neighbor);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub(crate) fn apply_incidence_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.edges) {
            *o = e.weight * (x[e.head] - x[e.tail]);
        }
    }

    /// Node-wise sums in canonical edge order.
    pub(crate) fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        for (node, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for inc in &self.adjacency[node] {
                acc += inc.sign() * self.edges[inc.edge].weight * y[inc.edge];
            }
            *o = acc;
        }
    }

    pub(crate) fn tv_of(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| e.weight * (x[e.head] - x[e.tail]).abs())
            .sum()
    }

    /// `D x`: entry `e = (i, j)` is `W_e (x_i - x_j)`.
    pub fn incidence_apply(&self, x: &GraphSignal) -> Result<EdgeVector> {
        check_len(self.num_nodes, x.len())?;
        let mut out = vec![0.0; self.num_edges()];
        self.apply_incidence_into(x, &mut out);
        Ok(EdgeVector(out))
    }

    /// `Dᵀ y`: node `i` receives `Σ_{head=i} W_e y_e − Σ_{tail=i} W_e y_e`.
    pub fn incidence_transpose_apply(&self, y: &EdgeVector) -> Result<GraphSignal> {
        check_len(self.num_edges(), y.len())?;
        let mut out = vec![0.0; self.num_nodes];
        self.apply_transpose_into(y, &mut out);
        Ok(GraphSignal(out))
    }

    /// Weighted total variation `Σ W_ij |x_i − x_j|`.
    pub fn tv_norm(&self, x: &GraphSignal) -> Result<f64> {
        check_len(self.num_nodes, x.len())?;
        Ok(self.tv_of(x))
    }

    /// Edges whose endpoints lie in different clusters.
    pub fn boundary_edges(&self, partition: &Partition) -> Result<Vec<usize>> {
        check_len(self.num_nodes, partition.num_nodes())?;
        Ok(self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| partition.cluster_of(e.head) != partition.cluster_of(e.tail))
            .map(|(idx, _)| idx)
            .collect())
    }

    /// Edges with exactly one endpoint in cluster `cluster`.
    pub fn cluster_boundary(&self, partition: &Partition, cluster: usize) -> Result<Vec<usize>> {
        check_len(self.num_nodes, partition.num_nodes())?;
        if cluster >= partition.num_clusters() {
            return Err(Error::InvalidParameter(format!(
                "cluster {cluster} does not exist (partition has {})",
                partition.num_clusters()
            )));
        }
        Ok(self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                (partition.cluster_of(e.head) == cluster)
                    != (partition.cluster_of(e.tail) == cluster)
            })
            .map(|(idx, _)| idx)
            .collect())
    }

    /// Signal equal to `coeffs[l]` on every node of cluster `l`.
    pub fn piecewise_constant_signal(
        &self,
        partition: &Partition,
        coeffs: &[f64],
    ) -> Result<GraphSignal> {
        check_len(self.num_nodes, partition.num_nodes())?;
        check_len(partition.num_clusters(), coeffs.len())?;
        GraphSignal::new(
            (0..self.num_nodes)
                .map(|i| coeffs[partition.cluster_of(i)])
                .collect(),
        )
    }
}

/// `+1` for strictly positive arguments, `-1` otherwise.
#[inline]
pub fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else {
        -1.0
    }
}

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(Vec<f64>);

        impl $name {
            /// Wraps `values`, rejecting non-finite entries.
            pub fn new(values: Vec<f64>) -> Result<Self> {
                if let Some((index, &value)) =
                    values.iter().enumerate().find(|(_, v)| !v.is_finite())
                {
                    return Err(Error::NonFinite { index, value });
                }
                Ok(Self(values))
            }

            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn constant(len: usize, value: f64) -> Self {
                Self(vec![value; len])
            }

            pub fn values(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub(crate) fn from_raw(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.0
            }

            pub fn dot(&self, other: &Self) -> f64 {
                self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
            }

            pub fn norm_inf(&self) -> f64 {
                self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl Index<usize> for $name {
            type Output = f64;

            fn index(&self, idx: usize) -> &f64 {
                &self.0[idx]
            }
        }
    };
}

real_vector!(
    /// Real value per node.
    GraphSignal
);
real_vector!(
    /// Real value per oriented edge, aligned with the canonical edge order.
    EdgeVector
);

/// Disjoint assignment of every node to one of `num_clusters` non-empty
/// clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    cluster_of: Vec<usize>,
    num_clusters: usize,
}

impl Partition {
    pub fn new(cluster_of: Vec<usize>) -> Result<Self> {
        let num_clusters = cluster_of.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut sizes = vec![0usize; num_clusters];
        for &c in &cluster_of {
            sizes[c] += 1;
        }
        if let Some(cluster) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyCluster { cluster });
        }
        Ok(Self {
            cluster_of,
            num_clusters,
        })
    }

    /// Every node in cluster 0.
    pub fn single(num_nodes: usize) -> Self {
        Self {
            cluster_of: vec![0; num_nodes],
            num_clusters: usize::from(num_nodes > 0),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.cluster_of[node]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.cluster_of
    }

    /// Nodes of `cluster` in increasing order.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.cluster_of
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &c in &self.cluster_of {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Labeled nodes with their observed values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    labels: BTreeMap<usize, f64>,
}

impl TrainingSet {
    pub fn new<I>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut map = BTreeMap::new();
        for (node, value) in labels {
            if !value.is_finite() {
                return Err(Error::NonFinite { index: node, value });
            }
            if map.insert(node, value).is_some() {
                return Err(Error::DuplicateNode { node });
            }
        }
        Ok(Self { labels: map })
    }

    /// Labels every node in `nodes` with the corresponding entry of `signal`.
    pub fn sample(signal: &GraphSignal, nodes: &[usize]) -> Result<Self> {
        Self::new(nodes.iter().map(|&i| (i, signal[i])))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, node: usize) -> Option<f64> {
        self.labels.get(&node).copied()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.labels.contains_key(&node)
    }

    /// Labeled nodes and values in increasing node order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.labels.iter().map(|(&i, &v)| (i, v))
    }

    pub fn nodes(&self) -> Vec<usize> {
        self.labels.keys().copied().collect()
    }

    /// Checks that every labeled node exists in a graph of `num_nodes` nodes.
    pub fn validate_for(&self, num_nodes: usize) -> Result<()> {
        match self.labels.keys().next_back() {
            Some(&node) if node >= num_nodes => Err(Error::NodeOutOfRange { node, num_nodes }),
            _ => Ok(()),
        }
    }

    /// Dense per-node view: `Some(label)` on labeled nodes.
    pub fn dense(&self, num_nodes: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; num_nodes];
        for (i, v) in self.iter() {
            out[i] = Some(v);
        }
        out
    }

    /// Distinct label values in increasing order.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self.labels.values().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals
    }
}
