//! Circuit knitting: cut a circuit across one qubit boundary, simulate the
//! two fragments independently, and recombine observables.
//!
//! Each cut gate is replaced by a quasiprobability mixture of local
//! operations (single-qubit rotations and signed Z measurements). The
//! sampling overhead of a plan is Π γ² over its cut gates. Cut locations can
//! be chosen from an MPS entanglement profile ([`adaptive_plan`]) or at the
//! most balanced boundary ([`baseline_plan`]).

mod decompose;
mod execute;
mod plan;
mod spinchain;

use thiserror::Error;

use crate::circuit::CircuitError;
use crate::simmps::MpsError;
use crate::simsv::SimError;

pub use decompose::{decompose_cut_gate, CutGateDecomposition, CutTerm, LocalOp, CHANNEL_TOL};
pub use execute::{knit_execute, KnitMode, KnitResult};
pub use plan::{
    adaptive_plan, baseline_bond, baseline_plan, crossing_gates, default_checkpoints, median,
    overhead_reduction, overhead_reduction_with_profile, plan_for_bond, write_ensemble_csv,
    Aggregate, Constraints, CutPlan, EnsembleRow, OverheadReport,
};
pub use spinchain::{build_spinchain_circuit, Disorder, SpinChainConfig, SpinChainSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnitError {
    #[error("cannot cut gate `{0}`")]
    Unsupported(String),
    #[error("gate has an unbound parameter")]
    Unbound,
    #[error("decomposition failed its channel check (residual {0:e})")]
    ChannelCheck(f64),
    #[error("bond {bond} is not inside a {n_qubits}-qubit register")]
    BadBond { bond: usize, n_qubits: usize },
    #[error("plan does not match the circuit")]
    PlanMismatch,
    #[error("profile has {bonds} bonds but the circuit has {n_qubits} qubits")]
    ProfileMismatch { bonds: usize, n_qubits: usize },
    #[error("no bond satisfies the fragment constraints")]
    NoFeasibleBond,
    #[error("observable acts on {observable} qubits, circuit has {circuit}")]
    ObservableWidth { circuit: usize, observable: usize },
    #[error("fragment of {0} qubits exceeds the simulator cap")]
    FragmentTooLarge(usize),
    #[error("shots must be positive")]
    NoShots,
    #[error("invalid spin chain: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("io: {0}")]
    Io(String),
}
