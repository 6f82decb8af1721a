//! Network-flow view of the dual problem: conversion between multipliers and
//! flows, feasibility checks, max-flow, and resolving-set verification.

mod maxflow;
mod resolving;

pub use maxflow::{max_flow, Arc, FlowProblem, MaxFlowResult, RESIDUAL_EPS};
pub use resolving::{
    build_augmented_subgraph, cut_condition_check, resolving_check_exact, resolving_check_maxflow,
    AugmentedClusterGraph, AugmentedEdge, ClusterReport, ClusterStatus, MAX_CUT_CLUSTER,
    MAX_EXACT_BOUNDARY,
};

use crate::error::{check_len, Error, Result};
use crate::graph::{EdgeVector, EmpiricalGraph, GraphSignal, TrainingSet};

/// Signed flow per oriented edge; positive values run head → tail.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    values: Vec<f64>,
}

impl Flow {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub fn zeros(num_edges: usize) -> Self {
        Self {
            values: vec![0.0; num_edges],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multipliers `y_e = f_e / W_e`.
    pub fn to_dual(&self, g: &EmpiricalGraph) -> Result<EdgeVector> {
        check_len(g.num_edges(), self.len())?;
        Ok(EdgeVector::from_raw(
            self.values
                .iter()
                .zip(g.edges())
                .map(|(f, e)| f / e.weight)
                .collect(),
        ))
    }
}

/// `f_e = W_e y_e`.
pub fn dual_to_flow(g: &EmpiricalGraph, y: &EdgeVector) -> Result<Flow> {
    check_len(g.num_edges(), y.len())?;
    Ok(Flow {
        values: y.iter().zip(g.edges()).map(|(y, e)| e.weight * y).collect(),
    })
}

/// Net outflow (supply) at every node.
pub fn divergence(g: &EmpiricalGraph, f: &Flow) -> Result<GraphSignal> {
    check_len(g.num_edges(), f.len())?;
    let mut out = vec![0.0; g.num_nodes()];
    for (node, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for inc in g.incident(node) {
            acc += inc.sign() * f.values[inc.edge];
        }
        *o = acc;
    }
    Ok(GraphSignal::from_raw(out))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityViolation {
    pub edge: usize,
    pub flow: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationViolation {
    pub node: usize,
    pub supply: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    pub capacity: Vec<CapacityViolation>,
    pub conservation: Vec<ConservationViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.capacity.is_empty() && self.conservation.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some(c) = self.capacity.first() {
            parts.push(format!(
                "{} capacity violation(s), first on edge {} (|{}| > {})",
                self.capacity.len(),
                c.edge,
                c.flow,
                c.capacity
            ));
        }
        if let Some(c) = self.conservation.first() {
            parts.push(format!(
                "{} conservation violation(s), first at node {} (supply {})",
                self.conservation.len(),
                c.node,
                c.supply
            ));
        }
        if parts.is_empty() {
            "feasible".into()
        } else {
            parts.join("; ")
        }
    }
}

/// Capacity `|f_e| ≤ W_e` on `cap_edges` and zero supply at unlabeled nodes,
/// both up to `tol`.
pub fn check_flow_feasible(
    g: &EmpiricalGraph,
    f: &Flow,
    t: &TrainingSet,
    cap_edges: &[usize],
    tol: f64,
) -> Result<FeasibilityReport> {
    check_len(g.num_edges(), f.len())?;
    t.validate_for(g.num_nodes())?;
    let mut report = FeasibilityReport::default();
    for &edge in cap_edges {
        if edge >= g.num_edges() {
            return Err(Error::InvalidParameter(format!(
                "edge index {edge} out of range"
            )));
        }
        let capacity = g.edge(edge).weight;
        let flow = f.values[edge];
        if flow.abs() > capacity + tol {
            report.capacity.push(CapacityViolation {
                edge,
                flow,
                capacity,
            });
        }
    }
    let supply = divergence(g, f)?;
    for (node, &s) in supply.iter().enumerate() {
        if !t.contains(node) && s.abs() > tol {
            report
                .conservation
                .push(ConservationViolation { node, supply: s });
        }
    }
    Ok(report)
}

/// `Σ_{i∈M} x_i v_i` for a flow that is feasible on every edge.
pub fn dual_objective(g: &EmpiricalGraph, t: &TrainingSet, f: &Flow, tol: f64) -> Result<f64> {
    let all: Vec<usize> = (0..g.num_edges()).collect();
    let report = check_flow_feasible(g, f, t, &all, tol)?;
    if !report.is_feasible() {
        return Err(Error::InfeasibleFlow(report.summary()));
    }
    let supply = divergence(g, f)?;
    Ok(t.iter().map(|(i, x)| x * supply[i]).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstancyViolation {
    pub edge: usize,
    pub flow: f64,
    pub difference: f64,
}

/// Edges that are unsaturated (`|f_e| < W_e − tol`) yet carry a jump
/// `|x_head − x_tail| > tol` in `x_hat`.
pub fn unsaturated_constancy_check(
    g: &EmpiricalGraph,
    f: &Flow,
    x_hat: &GraphSignal,
    tol: f64,
) -> Result<Vec<ConstancyViolation>> {
    check_len(g.num_edges(), f.len())?;
    check_len(g.num_nodes(), x_hat.len())?;
    Ok(g.edges()
        .iter()
        .enumerate()
        .filter_map(|(edge, e)| {
            let flow = f.values[edge];
            let difference = (x_hat[e.head] - x_hat[e.tail]).abs();
            (flow.abs() < e.weight - tol && difference > tol).then_some(ConstancyViolation {
                edge,
                flow,
                difference,
            })
        })
        .collect())
}

/// One row of a flow dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRow {
    pub head: usize,
    pub tail: usize,
    pub flow: f64,
    pub capacity: f64,
    pub saturated: bool,
}

pub fn flow_rows(g: &EmpiricalGraph, f: &Flow, tol: f64) -> Result<Vec<FlowRow>> {
    check_len(g.num_edges(), f.len())?;
    Ok(g.edges()
        .iter()
        .zip(&f.values)
        .map(|(e, &flow)| FlowRow {
            head: e.head,
            tail: e.tail,
            flow,
            capacity: e.weight,
            saturated: flow.abs() >= e.weight - tol,
        })
        .collect())
}

/// Per-cluster ratio `|M ∩ C_l| p_in / (2 p_out (N − |C_l|))`; values above
/// one suggest that labels in `C_l` can push enough flow to its boundary.
pub fn sbm_condition(
    cluster_sizes: &[usize],
    labeled_per_cluster: &[usize],
    p_in: f64,
    p_out: f64,
) -> Result<Vec<f64>> {
    check_len(cluster_sizes.len(), labeled_per_cluster.len())?;
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "probability {p} outside [0, 1]"
            )));
        }
    }
    let total: usize = cluster_sizes.iter().sum();
    Ok(cluster_sizes
        .iter()
        .zip(labeled_per_cluster)
        .map(|(&size, &m)| {
            let outside = (total - size) as f64;
            if p_out == 0.0 || outside == 0.0 {
                f64::INFINITY
            } else {
                m as f64 * p_in / (2.0 * p_out * outside)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> EmpiricalGraph {
        EmpiricalGraph::new(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap()
    }

    #[test]
    fn dual_flow_conversion() {
        let g = path3();
        let f = dual_to_flow(&g, &EdgeVector::zeros(2)).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        let y = EdgeVector::new(vec![1.0, -0.5]).unwrap();
        let f = dual_to_flow(&g, &y).unwrap();
        assert_eq!(f.values(), &[1.0, -1.0]);
        assert_eq!(f.to_dual(&g).unwrap(), y);
        let all = [0, 1];
        let t = TrainingSet::new([(0, 0.0), (1, 0.0), (2, 0.0)]).unwrap();
        assert!(check_flow_feasible(&g, &f, &t, &all, 0.0)
            .unwrap()
            .is_feasible());
    }

    #[test]
    fn divergence_of_path_flow() {
        let g = path3();
        assert!(divergence(&g, &Flow::zeros(2))
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let f = Flow::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(divergence(&g, &f).unwrap().values(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn feasibility_violations() {
        let g = path3();
        let t = TrainingSet::new([(0, 1.0), (2, 0.0)]).unwrap();
        let f = Flow::new(vec![2.0, 2.0]).unwrap();
        let r = check_flow_feasible(&g, &f, &t, &[0], 1e-9).unwrap();
        assert_eq!(r.capacity.len(), 1);
        assert_eq!(r.capacity[0].edge, 0);
        assert!(r.conservation.is_empty());
        let f = Flow::new(vec![1.0, 0.5]).unwrap();
        let r = check_flow_feasible(&g, &f, &t, &[], 1e-9).unwrap();
        assert_eq!(r.conservation.len(), 1);
        assert_eq!(r.conservation[0].node, 1);
        assert!(dual_objective(&g, &t, &f, 1e-9).is_err());
    }

    #[test]
    fn dual_objective_is_linear_in_labels() {
        let g = path3();
        let t = TrainingSet::new([(0, 1.0), (2, -1.0)]).unwrap();
        let f = Flow::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(dual_objective(&g, &t, &Flow::zeros(2), 1e-9).unwrap(), 0.0);
        let v = dual_objective(&g, &t, &f, 1e-9).unwrap();
        assert_eq!(v, 2.0);
        let t3 = TrainingSet::new([(0, 3.0), (2, -3.0)]).unwrap();
        assert_eq!(dual_objective(&g, &t3, &f, 1e-9).unwrap(), 3.0 * v);
    }

    #[test]
    fn constancy_check() {
        let g = path3();
        let saturated = Flow::new(vec![1.0, -2.0]).unwrap();
        let x = GraphSignal::new(vec![0.0, 5.0, -3.0]).unwrap();
        assert!(unsaturated_constancy_check(&g, &saturated, &x, 1e-9)
            .unwrap()
            .is_empty());
        let slack = Flow::new(vec![0.5, -2.0]).unwrap();
        let v = unsaturated_constancy_check(&g, &slack, &x, 1e-9).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].edge, 0);
    }

    #[test]
    fn sbm_margins() {
        let m = sbm_condition(&[10, 10, 10], &[5, 5, 5], 0.8, 0.1).unwrap();
        for v in &m {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(sbm_condition(&[10, 10], &[1, 1], 0.5, 0.0)
            .unwrap()
            .iter()
            .all(|v| v.is_infinite()));
        let a = sbm_condition(&[10, 20], &[2, 3], 0.5, 0.1).unwrap();
        let b = sbm_condition(&[10, 20], &[4, 6], 0.5, 0.1).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
        assert!(sbm_condition(&[10], &[1], 1.5, 0.1).is_err());
    }
}
