//! Hybrid quantum-classical workload toolkit.
//!
//! The crate is organised around a small gate-level circuit IR ([`circuit`])
//! that every other module consumes:
//!
//! * [`qasm`] parses and emits an OpenQASM 2 subset,
//! * [`simsv`] is a dense statevector simulator (the ground truth),
//! * [`simmps`] is a matrix-product-state simulator used as an entanglement
//!   probe,
//! * [`knit`] cuts circuits across a qubit boundary and reconstructs
//!   observables from quasiprobability ensembles,
//! * [`maxcut`] implements QAOA and the divide-and-conquer QAOA² pipeline,
//! * [`hhl`] is an end-to-end HHL linear solver,
//! * [`dispatch`] hosts the job server, its client and a scheduler simulator.
//!
//! Qubit 0 is the least-significant bit of every basis-state index.

pub mod circuit;
pub mod dispatch;
pub mod hhl;
pub mod knit;
pub mod linalg;
pub mod maxcut;
pub mod qasm;
pub mod simmps;
pub mod simsv;

pub use num_complex::Complex64 as C64;
