use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::PauliSum;
use crate::qasm;
use crate::simsv::{expectation, sample, simulate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Shots { shots: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobRequest {
    pub circuit: String,
    pub observable: serde_json::Value,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Request {
    Submit(JobRequest),
    Poll { job_id: u64 },
    Fetch { job_id: u64 },
    Shutdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobOutput {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counts: Option<BTreeMap<String, usize>>,
    pub expectation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Reply {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub job_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub status: Option<JobStatus>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub result: Option<JobOutput>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl Reply {
    pub fn error(message: impl Into<String>) -> Self {
        Reply {
            ok: false,
            error: Some(message.into()),
            ..Default::default()
        }
    }
}

/// Checks a request and returns the runnable pieces, or the diagnostic that
/// marks the job failed.
pub(crate) fn prepare(req: &JobRequest) -> Result<(crate::circuit::Circuit, PauliSum), String> {
    let circuit = qasm::parse(&req.circuit).map_err(|e| format!("qasm {e}"))?;
    let obs: PauliSum =
        serde_json::from_value(req.observable.clone()).map_err(|e| format!("observable: {e}"))?;
    if obs.n_qubits() != circuit.n_qubits() {
        return Err(format!(
            "observable acts on {} qubits, circuit has {}",
            obs.n_qubits(),
            circuit.n_qubits()
        ));
    }
    if let Mode::Shots { shots: 0, .. } = req.mode {
        return Err("shots must be positive".into());
    }
    Ok((circuit, obs))
}

/// Runs a job on the statevector backend. Deterministic in the request.
pub fn execute_job(req: &JobRequest) -> Result<JobOutput, String> {
    let (circuit, obs) = prepare(req)?;
    let state = simulate(&circuit, None).map_err(|e| e.to_string())?;
    match req.mode {
        Mode::Exact => {
            let e = expectation(&state, &obs).map_err(|e| e.to_string())?;
            Ok(JobOutput {
                counts: None,
                expectation: Some(e),
            })
        }
        Mode::Shots { shots, seed } => {
            let counts = sample(&state, shots, seed);
            Ok(JobOutput {
                expectation: estimate_from_counts(&obs, &counts, shots),
                counts: Some(counts),
            })
        }
    }
}

fn estimate_from_counts(
    obs: &PauliSum,
    counts: &BTreeMap<String, usize>,
    shots: usize,
) -> Option<f64> {
    if obs.terms().iter().any(|(_, p)| !p.is_diagonal()) {
        return None;
    }
    let mut total = 0.0;
    for (bits, &n) in counts {
        let index = usize::from_str_radix(bits, 2).ok()?;
        let value: f64 = obs
            .terms()
            .iter()
            .map(|(c, p)| c * p.diagonal_sign(index))
            .sum();
        total += value * n as f64;
    }
    Some(total / shots as f64)
}
