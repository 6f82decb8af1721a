//! Semi-supervised recovery of piecewise-constant graph signals by
//! total-variation minimization.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod flow;
pub mod graph;
pub mod io;
pub mod mp;
pub mod solver;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeVector, EmpiricalGraph, GraphSignal, Incidence, Partition, TrainingSet};
