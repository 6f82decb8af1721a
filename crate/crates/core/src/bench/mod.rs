//! Instance generators, a fixed two-cluster fixture, the NMSE metric, an
//! exhaustive TV-min oracle, and the experiment drivers.

mod experiments;

pub use experiments::{
    exp_compare, exp_sbm, exp_two_cluster, Bucket, CompareConfig, CompareResult, CompareRow,
    ExperimentConfig, GeneratorConfig, SbmResult, SbmRow, SbmSweep, SolverConfig, TwoClusterResult,
    TwoClusterSweep, TwoClusterTrial,
};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::graph::{EmpiricalGraph, GraphSignal, Partition, TrainingSet};

/// Attempts before a generator gives up on drawing a graph without isolated
/// nodes.
pub const MAX_ATTEMPTS: usize = 1000;

/// Generator stream `stream` of the family selected by `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// An instance with its planted signal and partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub graph: EmpiricalGraph,
    pub partition: Partition,
    pub labels: TrainingSet,
    pub signal: GraphSignal,
}

/// Two 4-node clusters `{0,1,2,3}` and `{4,5,6,7}` with unit intra-cluster
/// weights, joined by the single edge `{3,4}` of weight 1/2. Node 0 carries
/// label 1 and node 7 label 0; the planted signal is 1 on the first cluster
/// and 0 on the second.
pub fn two_cluster_fixture() -> Fixture {
    let graph = EmpiricalGraph::new(
        8,
        [
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 2, 1.0),
            (1, 3, 1.0),
            (2, 3, 1.0),
            (3, 4, 0.5),
            (4, 5, 1.0),
            (4, 6, 1.0),
            (5, 6, 1.0),
            (5, 7, 1.0),
            (6, 7, 1.0),
        ],
    )
    .expect("fixture graph is valid");
    let partition = Partition::new(vec![0, 0, 0, 0, 1, 1, 1, 1]).expect("fixture partition");
    let signal = graph
        .piecewise_constant_signal(&partition, &[1.0, 0.0])
        .expect("fixture signal");
    let labels = TrainingSet::sample(&signal, &[0, 7]).expect("fixture labels");
    Fixture {
        graph,
        partition,
        labels,
        signal,
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {p} is not a probability"
        )))
    }
}

/// Draws edge lists from `draw` until one leaves no node isolated.
fn without_isolated<R: Rng>(
    rng: &mut R,
    num_nodes: usize,
    mut draw: impl FnMut(&mut R) -> Vec<(usize, usize)>,
) -> Result<EmpiricalGraph> {
    for _ in 0..MAX_ATTEMPTS {
        let edges = draw(rng);
        let mut touched = vec![false; num_nodes];
        for &(u, v) in &edges {
            touched[u] = true;
            touched[v] = true;
        }
        if touched.iter().all(|&t| t) {
            return EmpiricalGraph::new(num_nodes, edges.into_iter().map(|(u, v)| (u, v, 1.0)));
        }
    }
    Err(Error::GeneratorExhausted {
        attempts: MAX_ATTEMPTS,
        reason: "every draw left an isolated node".into(),
    })
}

/// As [`gen_two_cluster`], drawing from `rng`.
pub fn gen_two_cluster_with<R: Rng>(
    rng: &mut R,
    n_per_cluster: usize,
    p_edge: f64,
    n_cross: usize,
) -> Result<(EmpiricalGraph, Partition)> {
    check_probability("p_edge", p_edge)?;
    if n_per_cluster < 2 {
        return Err(Error::InvalidParameter(
            "clusters need at least 2 nodes".into(),
        ));
    }
    let n = n_per_cluster;
    if n_cross > n * n {
        return Err(Error::InvalidParameter(format!(
            "{n_cross} cross edges requested but only {} node pairs exist",
            n * n
        )));
    }
    let g = without_isolated(rng, 2 * n, |rng| {
        let mut edges = Vec::new();
        for offset in [0, n] {
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(p_edge) {
                        edges.push((offset + i, offset + j));
                    }
                }
            }
        }
        for pair in sample(rng, n * n, n_cross) {
            edges.push((pair / n, n + pair % n));
        }
        edges
    })?;
    let partition = Partition::new((0..2 * n).map(|i| i / n).collect())?;
    Ok((g, partition))
}

/// Two Erdős–Rényi clusters of `n_per_cluster` nodes with edge probability
/// `p_edge`, plus `n_cross` distinct uniformly placed cross edges. All
/// weights are 1. Draws with isolated nodes are rejected and redrawn.
pub fn gen_two_cluster(
    n_per_cluster: usize,
    p_edge: f64,
    n_cross: usize,
    seed: u64,
) -> Result<(EmpiricalGraph, Partition)> {
    gen_two_cluster_with(&mut rng_for(seed, 0), n_per_cluster, p_edge, n_cross)
}

/// As [`gen_sbm`], drawing from `rng`.
pub fn gen_sbm_with<R: Rng>(
    rng: &mut R,
    cluster_sizes: &[usize],
    p_in: f64,
    p_out: f64,
) -> Result<(EmpiricalGraph, Partition)> {
    check_probability("p_in", p_in)?;
    check_probability("p_out", p_out)?;
    if cluster_sizes.is_empty() || cluster_sizes.contains(&0) {
        return Err(Error::InvalidParameter(
            "cluster sizes must be positive".into(),
        ));
    }
    let cluster_of: Vec<usize> = cluster_sizes
        .iter()
        .enumerate()
        .flat_map(|(l, &s)| std::iter::repeat_n(l, s))
        .collect();
    let n = cluster_of.len();
    let g = without_isolated(rng, n, |rng| {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if cluster_of[i] == cluster_of[j] {
                    p_in
                } else {
                    p_out
                };
                if rng.gen_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        edges
    })?;
    Ok((g, Partition::new(cluster_of)?))
}

/// Stochastic block model with unit weights: nodes in the same cluster are
/// joined with probability `p_in`, others with probability `p_out`.
pub fn gen_sbm(
    cluster_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(EmpiricalGraph, Partition)> {
    gen_sbm_with(&mut rng_for(seed, 0), cluster_sizes, p_in, p_out)
}

/// Connected graph on `num_nodes` nodes (random spanning tree plus extra
/// edges with probability `p_extra`) with weights drawn from
/// `{0.25, 0.5, …, 2}`, and `num_labels` labeled nodes whose values are
/// drawn from `0..num_values`.
pub fn gen_small_instance<R: Rng>(
    rng: &mut R,
    num_nodes: usize,
    p_extra: f64,
    num_labels: usize,
    num_values: usize,
) -> Result<(EmpiricalGraph, TrainingSet)> {
    check_probability("p_extra", p_extra)?;
    if num_nodes < 2 || num_labels == 0 || num_labels > num_nodes || num_values == 0 {
        return Err(Error::InvalidParameter(format!(
            "cannot label {num_labels} of {num_nodes} nodes with {num_values} values"
        )));
    }
    let weight = |rng: &mut R| rng.gen_range(1..=8) as f64 / 4.0;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for v in 1..num_nodes {
        let u = rng.gen_range(0..v);
        seen.insert((u, v));
        edges.push((u, v, weight(rng)));
    }
    for u in 0..num_nodes {
        for v in u + 1..num_nodes {
            if !seen.contains(&(u, v)) && rng.gen_bool(p_extra) {
                edges.push((u, v, weight(rng)));
            }
        }
    }
    let g = EmpiricalGraph::new(num_nodes, edges)?;
    let labels = sample(rng, num_nodes, num_labels)
        .into_iter()
        .map(|i| (i, rng.gen_range(0..num_values) as f64))
        .collect::<Vec<_>>();
    Ok((g, TrainingSet::new(labels)?))
}

/// Picks `per_cluster` distinct nodes uniformly from every cluster.
pub fn sample_per_cluster<R: Rng>(
    rng: &mut R,
    partition: &Partition,
    per_cluster: usize,
) -> Result<Vec<usize>> {
    let mut nodes = Vec::new();
    for l in 0..partition.num_clusters() {
        let members = partition.members(l);
        if per_cluster > members.len() {
            return Err(Error::InvalidParameter(format!(
                "cluster {l} has {} nodes, cannot pick {per_cluster}",
                members.len()
            )));
        }
        let mut picked: Vec<usize> = sample(rng, members.len(), per_cluster)
            .into_iter()
            .map(|k| members[k])
            .collect();
        picked.sort_unstable();
        nodes.extend(picked);
    }
    Ok(nodes)
}

/// `‖x_true − x_hat‖² / ‖x_true‖²`.
pub fn nmse(x_true: &GraphSignal, x_hat: &GraphSignal) -> Result<f64> {
    check_len(x_true.len(), x_hat.len())?;
    let norm: f64 = x_true.iter().map(|v| v * v).sum();
    if norm == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let err: f64 = x_true
        .iter()
        .zip(x_hat.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(err / norm)
}

/// Largest number of unlabeled nodes accepted by [`tvmin_oracle`].
pub const ORACLE_MAX_UNLABELED: usize = 10;
/// Largest number of distinct label values accepted by [`tvmin_oracle`].
pub const ORACLE_MAX_VALUES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub tv: f64,
    pub signal: GraphSignal,
}

/// Exhaustive TV minimization over assignments of the unlabeled nodes to the
/// observed label values. Some minimizer always takes values in that set, so
/// the returned TV is the true optimum.
pub fn tvmin_oracle(g: &EmpiricalGraph, t: &TrainingSet) -> Result<OracleSolution> {
    if t.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    t.validate_for(g.num_nodes())?;
    let values = t.distinct_values();
    let labels = t.dense(g.num_nodes());
    let free: Vec<usize> = (0..g.num_nodes())
        .filter(|&i| labels[i].is_none())
        .collect();
    if free.len() > ORACLE_MAX_UNLABELED || values.len() > ORACLE_MAX_VALUES {
        return Err(Error::TooLarge(format!(
            "oracle accepts at most {ORACLE_MAX_UNLABELED} unlabeled nodes and \
             {ORACLE_MAX_VALUES} label values, got {} and {}",
            free.len(),
            values.len()
        )));
    }
    let mut x: Vec<f64> = labels.iter().map(|l| l.unwrap_or(values[0])).collect();
    let mut digits = vec![0usize; free.len()];
    let mut best = (g.tv_of(&x), x.clone());
    // Mixed-radix increment over the free nodes.
    while let Some(pos) = digits.iter().position(|&d| d + 1 < values.len()) {
        for d in &mut digits[..pos] {
            *d = 0;
        }
        digits[pos] += 1;
        for (&i, &d) in free.iter().zip(&digits) {
            x[i] = values[d];
        }
        let tv = g.tv_of(&x);
        if tv < best.0 {
            best = (tv, x.clone());
        }
    }
    Ok(OracleSolution {
        tv: best.0,
        signal: GraphSignal::new(best.1)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shape() {
        let f = two_cluster_fixture();
        assert_eq!(f.graph.boundary_edges(&f.partition).unwrap().len(), 1);
        assert_eq!(f.graph.tv_norm(&f.signal).unwrap(), 0.5);
    }

    #[test]
    fn two_cluster_generator() {
        let (g, p) = gen_two_cluster(100, 0.1, 7, 3).unwrap();
        assert_eq!(g.num_nodes(), 200);
        assert_eq!(g.boundary_edges(&p).unwrap().len(), 7);
        assert_eq!(gen_two_cluster(100, 0.1, 7, 3).unwrap().0, g);
        assert_ne!(gen_two_cluster(100, 0.1, 7, 4).unwrap().0, g);
        let (g, p) = gen_two_cluster(20, 0.5, 0, 1).unwrap();
        assert!(g.boundary_edges(&p).unwrap().is_empty());
        assert!(gen_two_cluster(5, 0.5, 26, 1).is_err());
        assert!(matches!(
            gen_two_cluster(5, 0.0, 0, 1),
            Err(Error::GeneratorExhausted { .. })
        ));
    }

    #[test]
    fn sbm_generator() {
        let (g, p) = gen_sbm(&[10, 10, 10], 0.5, 0.0, 9).unwrap();
        assert!(g.boundary_edges(&p).unwrap().is_empty());
        let (g, _) = gen_sbm(&[4, 5], 1.0, 0.0, 9).unwrap();
        assert_eq!(g.num_edges(), 6 + 10);
        assert_eq!(
            gen_sbm(&[10, 10, 10], 0.5, 0.1, 2).unwrap(),
            gen_sbm(&[10, 10, 10], 0.5, 0.1, 2).unwrap()
        );
    }

    #[test]
    fn nmse_examples() {
        let x = GraphSignal::new(vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(nmse(&x, &x).unwrap(), 0.0);
        assert_eq!(nmse(&x, &GraphSignal::zeros(3)).unwrap(), 1.0);
        let doubled = GraphSignal::new(x.iter().map(|v| 2.0 * v).collect()).unwrap();
        assert_eq!(nmse(&x, &doubled).unwrap(), 1.0);
        assert!(matches!(
            nmse(&GraphSignal::zeros(3), &x),
            Err(Error::ZeroSignal)
        ));
    }

    #[test]
    fn oracle_examples() {
        let f = two_cluster_fixture();
        let o = tvmin_oracle(&f.graph, &f.labels).unwrap();
        assert_eq!(o.tv, 0.5);
        assert_eq!(o.signal, f.signal);

        let g = EmpiricalGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let t = TrainingSet::new([(0, 0.0), (2, 1.0)]).unwrap();
        assert_eq!(tvmin_oracle(&g, &t).unwrap().tv, 1.0);
        let all = TrainingSet::new([(0, 0.0), (1, 3.0), (2, 1.0)]).unwrap();
        assert_eq!(tvmin_oracle(&g, &all).unwrap().tv, 5.0);

        let big = EmpiricalGraph::new(12, (0..11).map(|i| (i, i + 1, 1.0))).unwrap();
        let t = TrainingSet::new([(0, 0.0)]).unwrap();
        assert!(matches!(tvmin_oracle(&big, &t), Err(Error::TooLarge(_))));
    }

    #[test]
    fn small_instances_are_connected() {
        let mut rng = rng_for(5, 0);
        for _ in 0..20 {
            let (g, t) = gen_small_instance(&mut rng, 12, 0.2, 3, 3).unwrap();
            assert!(g.components().iter().all(|&c| c == 0));
            assert_eq!(t.len(), 3);
        }
    }
}
