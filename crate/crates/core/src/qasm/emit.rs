use std::f64::consts::PI;
use std::fmt::Write;

use crate::circuit::{Circuit, GateKind};

use super::{QasmError, QasmErrorKind};

/// Largest denominator tried when recognising rational multiples of π.
const MAX_PI_DENOMINATOR: u32 = 64;

/// Canonical text for an angle.
///
/// Rational multiples of π are printed as `pi`, `pi/m`, `k*pi` or `k*pi/m`
/// only when the parser's evaluation of that text reproduces `theta` bit for
/// bit; everything else is printed as the shortest round-tripping decimal.
pub fn format_angle(theta: f64) -> String {
    if theta == 0.0 || !theta.is_finite() {
        return format!("{theta}");
    }
    let sign = if theta < 0.0 { "-" } else { "" };
    let mag = theta.abs();
    for m in 1..=MAX_PI_DENOMINATOR {
        let k = (mag * m as f64 / PI).round();
        if !(1.0..=4096.0).contains(&k) {
            continue;
        }
        let (value, text) = match (k as u64, m) {
            (1, 1) => (PI, "pi".to_string()),
            (1, m) => (PI / m as f64, format!("pi/{m}")),
            (k, 1) => (k as f64 * PI, format!("{k}*pi")),
            (k, m) => (k as f64 * PI / m as f64, format!("{k}*pi/{m}")),
        };
        if value == mag {
            return format!("{sign}{text}");
        }
    }
    format!("{theta}")
}

/// Emits a bound circuit, one statement per line.
pub fn emit(circuit: &Circuit) -> Result<String, QasmError> {
    let n = circuit.n_qubits();
    let mut out = String::new();
    writeln!(out, "OPENQASM 2.0;").unwrap();
    writeln!(out, "qreg q[{n}];").unwrap();
    if circuit.has_measurements() {
        writeln!(out, "creg c[{n}];").unwrap();
    }
    for (i, gate) in circuit.gates().iter().enumerate() {
        let err = |msg: String| QasmError::new(QasmErrorKind::Unemittable, i + 1, 1, msg);
        let qs = gate.qubits();
        match gate.kind() {
            GateKind::Unitary => {
                return Err(err(format!(
                    "gate {i}: explicit unitaries cannot be emitted"
                )))
            }
            GateKind::Measure => writeln!(out, "measure q[{0}] -> c[{0}];", qs[0]).unwrap(),
            kind => {
                out.push_str(kind.mnemonic());
                if kind.is_rotation() {
                    match gate.angle() {
                        Some(theta) => write!(out, "({})", format_angle(theta)).unwrap(),
                        None => {
                            return Err(err(format!(
                                "gate {i}: unbound parameter `{}`",
                                gate.param().map(|p| p.to_string()).unwrap_or_default()
                            )))
                        }
                    }
                }
                let operands: Vec<String> = qs.iter().map(|q| format!("q[{q}]")).collect();
                writeln!(out, " {};", operands.join(",")).unwrap();
            }
        }
    }
    Ok(out)
}
