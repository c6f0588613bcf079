//! QAOA MaxCut and the QAOA² divide-and-conquer pipeline, with greedy and
//! random baselines.
//!
//! The cost Hamiltonian is `H_C = Σ (w/2)(I − Z_u Z_v)`, so `⟨H_C⟩` is the
//! expected cut weight. The ansatz is
//! `Π_j e^{−iβ_j H_M} e^{−iγ_j H_C} |+⟩^n` with `H_M = Σ X_i`.

mod graph;
mod partition;
mod qaoa;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::CircuitError;

pub use graph::{Edge, Graph};
pub use partition::{
    baseline_greedy, baseline_random, partition_graph, qaoa_squared, MergeMode, Partition,
    Qaoa2Config, Qaoa2Result, BRUTE_FORCE_LIMIT,
};
pub use qaoa::{
    cost_hamiltonian, cut_table, expected_cut, optimize, qaoa_ansatz, qaoa_state,
    qaoa_state_with_table, sample_assignment, CutAssignment, OptimizerConfig, QaoaParams,
    QaoaResult,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaxcutError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("{0} nodes exceeds the simulator cap")]
    TooLarge(usize),
    #[error("{0} communities is too many for brute-force merging")]
    TooManyCommunities(usize),
    #[error("{0}")]
    BadParams(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("io: {0}")]
    Io(String),
}

/// JSON result record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxcutReport {
    pub assignment: Vec<u8>,
    pub cut: f64,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<QaoaParams>,
}

impl MaxcutReport {
    pub fn new(method: &str, assignment: &CutAssignment, params: Option<QaoaParams>) -> Self {
        MaxcutReport {
            assignment: assignment.side.clone(),
            cut: assignment.cut_value,
            method: method.to_string(),
            params,
        }
    }
}

/// Benchmark row comparing methods on one graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub graph: String,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub method: String,
    pub cut: f64,
}

pub fn write_bench_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<(), MaxcutError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| MaxcutError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| MaxcutError::Io(e.to_string()))
}
