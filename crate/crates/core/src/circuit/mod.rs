//! Gate-level circuit IR and Pauli observables.

mod gate;
mod pauli;

use std::collections::HashMap;

use thiserror::Error;

pub use gate::{Angle, Gate, GateKind};
pub use pauli::{pauli_expectation_terms, Pauli, PauliString, PauliSum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("circuit needs at least one qubit")]
    NoQubits,
    #[error("{kind:?} acts on {expected} qubit(s), got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("{kind:?} applied twice to qubit {qubit}")]
    RepeatedQubit { kind: GateKind, qubit: usize },
    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("{0:?} requires an angle")]
    MissingParam(GateKind),
    #[error("{0:?} takes no angle")]
    UnexpectedParam(GateKind),
    #[error("{0:?} angle is not finite")]
    NonFiniteAngle(GateKind),
    #[error("unitary gate needs an explicit matrix")]
    MissingMatrix,
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("missing binding for parameter `{0}`")]
    MissingBinding(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{0}` is unbound")]
    Unbound(String),
    #[error("measurements cannot be inverted")]
    MeasurementNotInvertible,
    #[error("invalid Pauli string: {0}")]
    InvalidPauli(String),
    #[error("Pauli string width {got} does not match {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-diagonal Pauli string {0} cannot be read from computational-basis counts")]
    NonDiagonal(String),
    #[error("empty counts")]
    EmptyCounts,
    #[error("invalid bitstring `{0}`")]
    InvalidBitstring(String),
}

/// Ordered gate list over `n_qubits` qubits with named symbolic parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    params: Vec<String>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        Ok(Circuit {
            n_qubits,
            gates: Vec::new(),
            params: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Symbolic parameter names in first-use order.
    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn is_bound(&self) -> bool {
        self.params.is_empty()
    }

    pub fn has_measurements(&self) -> bool {
        self.gates.iter().any(|g| g.kind() == GateKind::Measure)
    }

    /// Appends a gate, registering any new symbolic parameter.
    pub fn append(&mut self, gate: Gate) -> Result<&mut Self, CircuitError> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.n_qubits) {
            return Err(CircuitError::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        if let Some(name) = gate.param().and_then(Angle::symbol_name) {
            if !self.params.iter().any(|p| p == name) {
                self.params.push(name.to_string());
            }
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// Builder-style [`Circuit::append`].
    pub fn with(mut self, gate: Gate) -> Result<Self, CircuitError> {
        self.append(gate)?;
        Ok(self)
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(
        &mut self,
        gates: I,
    ) -> Result<&mut Self, CircuitError> {
        for g in gates {
            self.append(g)?;
        }
        Ok(self)
    }

    /// Substitutes every symbolic parameter. Every parameter must be covered
    /// and every supplied name must exist.
    pub fn bind(&self, values: &HashMap<String, f64>) -> Result<Circuit, CircuitError> {
        for name in values.keys() {
            if !self.params.contains(name) {
                return Err(CircuitError::UnknownParameter(name.clone()));
            }
        }
        for name in &self.params {
            if !values.contains_key(name) {
                return Err(CircuitError::MissingBinding(name.clone()));
            }
        }
        let gates = self
            .gates
            .iter()
            .map(|g| match g.param() {
                Some(Angle::Symbol { name, scale }) => {
                    g.with_param(Some(Angle::Value(scale * values[name])))
                }
                _ => g.clone(),
            })
            .collect();
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
            params: Vec::new(),
        })
    }

    /// Reversed circuit of adjoint gates.
    pub fn inverse(&self) -> Result<Circuit, CircuitError> {
        if let Some(name) = self.params.first() {
            return Err(CircuitError::Unbound(name.clone()));
        }
        let gates = self
            .gates
            .iter()
            .rev()
            .map(Gate::adjoint)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
            params: Vec::new(),
        })
    }

    /// `self` followed by `other` (same width).
    pub fn compose(&self, other: &Circuit) -> Result<Circuit, CircuitError> {
        if other.n_qubits != self.n_qubits {
            return Err(CircuitError::WidthMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        let mut out = self.clone();
        out.extend(other.gates.iter().cloned())?;
        Ok(out)
    }

    /// Copy of the circuit without measurement markers.
    pub fn without_measurements(&self) -> Circuit {
        let mut out = Circuit {
            n_qubits: self.n_qubits,
            gates: Vec::new(),
            params: self.params.clone(),
        };
        out.gates = self
            .gates
            .iter()
            .filter(|g| g.kind() != GateKind::Measure)
            .cloned()
            .collect();
        out
    }
}
