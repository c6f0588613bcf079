//! OpenQASM 2 subset used as the client/server interchange format.
//!
//! Accepted programs look like
//!
//! ```text
//! OPENQASM 2.0;
//! qreg q[2];
//! creg c[2];
//! h q[0];
//! rzz(pi/2) q[0],q[1];
//! measure q[0] -> c[0];
//! ```
//!
//! Gate mnemonics are `h x y z s sdg t tdg rx ry rz rzz cx cz measure`.
//! Angles are decimal literals or the forms `pi`, `pi/m`, `k*pi`, `k*pi/m`,
//! each with an optional leading `-`. There is no general expression
//! evaluator, no `include`, and no classical control flow.

mod emit;
mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use emit::{emit, format_angle};
pub use parser::{parse, parse_bytes};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QasmErrorKind {
    Lexical,
    Syntax,
    UnknownGate,
    Register,
    Angle,
    Encoding,
    /// Raised by the emitter.
    Unemittable,
}

/// A diagnostic anchored at a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Error)]
pub struct QasmError {
    pub kind: QasmErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl QasmError {
    pub(crate) fn new(
        kind: QasmErrorKind,
        line: usize,
        col: usize,
        message: impl Into<String>,
    ) -> Self {
        QasmError {
            kind,
            line,
            col,
            message: message.into(),
        }
    }
}

impl fmt::Display for QasmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}
