//! Job server, client and the hybrid-job scheduler simulator.
//!
//! The server speaks newline-delimited JSON over TCP. Every request is one
//! line `{"op": …, …}` and every reply one line `{"ok": bool, …}`:
//!
//! ```text
//! {"op":"submit","circuit":"OPENQASM 2.0; …","observable":[{"coeff":1,"pauli":"ZZ"}],"mode":{"kind":"exact"}}
//! {"ok":true,"job_id":1}
//! {"op":"poll","job_id":1}
//! {"ok":true,"job_id":1,"status":"done"}
//! {"op":"fetch","job_id":1}
//! {"ok":true,"job_id":1,"status":"done","result":{"expectation":1.0}}
//! {"op":"shutdown"}
//! {"ok":true}
//! ```
//!
//! Shots mode is `{"kind":"shots","shots":1000,"seed":7}` and yields
//! `{"counts":{"00":498,"11":502},"expectation":…}`, where the expectation
//! is estimated from the counts when every observable term is diagonal and
//! is `null` otherwise.

mod client;
mod protocol;
mod sched;
mod server;

use thiserror::Error;

pub use client::Client;
pub use protocol::{execute_job, JobOutput, JobRequest, JobStatus, Mode, Reply, Request};
pub use sched::{
    compute_metrics, parse_workload, schedule, split_job, split_workload, validate_schedule,
    BlockKind, JobBlock, Metrics, Placement, Policy, Reservation, Resource, Resources, Schedule,
};
pub use server::{serve, ServerConfig, ServerHandle, MAX_LINE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispatchError {
    #[error("cyclic block dependencies")]
    Cyclic,
    #[error("workload: {0}")]
    Workload(String),
    #[error("io: {0}")]
    Io(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("server: {0}")]
    Server(String),
}

impl From<std::io::Error> for DispatchError {
    fn from(e: std::io::Error) -> Self {
        DispatchError::Io(e.to_string())
    }
}
