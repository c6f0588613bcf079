use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::sync::Arc;

use crate::linalg::{c, unitarity_defect, Matrix};
use crate::C64;

use super::CircuitError;

/// Gate vocabulary.
///
/// `Unitary` is a simulation-only escape hatch carrying an explicit matrix; it
/// cannot be emitted as QASM and is rejected by the MPS simulator when it spans
/// more than two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    RX,
    RY,
    RZ,
    RZZ,
    CX,
    CZ,
    Measure,
    Unitary,
}

impl GateKind {
    /// Number of qubits the gate acts on; `None` for `Unitary`.
    pub fn arity(self) -> Option<usize> {
        use GateKind::*;
        match self {
            RZZ | CX | CZ => Some(2),
            Unitary => None,
            _ => Some(1),
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::RZZ
        )
    }

    /// Lowercase QASM mnemonic.
    pub fn mnemonic(self) -> &'static str {
        use GateKind::*;
        match self {
            H => "h",
            X => "x",
            Y => "y",
            Z => "z",
            S => "s",
            Sdg => "sdg",
            T => "t",
            Tdg => "tdg",
            RX => "rx",
            RY => "ry",
            RZ => "rz",
            RZZ => "rzz",
            CX => "cx",
            CZ => "cz",
            Measure => "measure",
            Unitary => "unitary",
        }
    }

    pub fn from_mnemonic(name: &str) -> Option<GateKind> {
        use GateKind::*;
        Some(match name {
            "h" => H,
            "x" => X,
            "y" => Y,
            "z" => Z,
            "s" => S,
            "sdg" => Sdg,
            "t" => T,
            "tdg" => Tdg,
            "rx" => RX,
            "ry" => RY,
            "rz" => RZ,
            "rzz" => RZZ,
            "cx" => CX,
            "cz" => CZ,
            "measure" => Measure,
            _ => return None,
        })
    }
}

/// A rotation angle: either a number in radians or `scale · symbol`.
#[derive(Clone, Debug, PartialEq)]
pub enum Angle {
    Value(f64),
    Symbol { name: String, scale: f64 },
}

impl Angle {
    pub fn symbol(name: impl Into<String>) -> Self {
        Angle::Symbol {
            name: name.into(),
            scale: 1.0,
        }
    }

    pub fn scaled(name: impl Into<String>, scale: f64) -> Self {
        Angle::Symbol {
            name: name.into(),
            scale,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Angle::Value(v) => Some(*v),
            Angle::Symbol { .. } => None,
        }
    }

    pub fn symbol_name(&self) -> Option<&str> {
        match self {
            Angle::Value(_) => None,
            Angle::Symbol { name, .. } => Some(name),
        }
    }
}

impl From<f64> for Angle {
    fn from(v: f64) -> Self {
        Angle::Value(v)
    }
}

impl From<&str> for Angle {
    fn from(name: &str) -> Self {
        Angle::symbol(name)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Value(v) => write!(f, "{v}"),
            Angle::Symbol { name, scale } if *scale == 1.0 => write!(f, "{name}"),
            Angle::Symbol { name, scale } => write!(f, "{scale}*{name}"),
        }
    }
}

/// A validated gate.
///
/// For multi-qubit gates the local matrix index uses bit `i` for `qubits[i]`,
/// so `CX` has `qubits[0]` as control and `qubits[1]` as target.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: Vec<usize>,
    param: Option<Angle>,
    matrix: Option<Arc<Matrix>>,
}

impl Gate {
    pub fn new(
        kind: GateKind,
        qubits: Vec<usize>,
        param: Option<Angle>,
    ) -> Result<Self, CircuitError> {
        if kind == GateKind::Unitary {
            return Err(CircuitError::MissingMatrix);
        }
        let expected = kind.arity().unwrap_or(0);
        if qubits.len() != expected {
            return Err(CircuitError::Arity {
                kind,
                expected,
                got: qubits.len(),
            });
        }
        check_distinct(kind, &qubits)?;
        match (kind.is_rotation(), &param) {
            (true, None) => return Err(CircuitError::MissingParam(kind)),
            (false, Some(_)) => return Err(CircuitError::UnexpectedParam(kind)),
            _ => {}
        }
        if let Some(Angle::Value(v)) = &param {
            if !v.is_finite() {
                return Err(CircuitError::NonFiniteAngle(kind));
            }
        }
        Ok(Gate {
            kind,
            qubits,
            param,
            matrix: None,
        })
    }

    /// Simulation-only gate with an explicit unitary on `qubits`.
    pub fn unitary(qubits: Vec<usize>, matrix: Matrix) -> Result<Self, CircuitError> {
        let k = qubits.len();
        if k == 0 || matrix.nrows() != 1 << k || matrix.ncols() != 1 << k {
            return Err(CircuitError::Arity {
                kind: GateKind::Unitary,
                expected: matrix.nrows().trailing_zeros() as usize,
                got: k,
            });
        }
        check_distinct(GateKind::Unitary, &qubits)?;
        if unitarity_defect(&matrix) > 1e-9 {
            return Err(CircuitError::NotUnitary);
        }
        Ok(Gate {
            kind: GateKind::Unitary,
            qubits,
            param: None,
            matrix: Some(Arc::new(matrix)),
        })
    }

    fn fixed(kind: GateKind, qubits: Vec<usize>) -> Self {
        Gate::new(kind, qubits, None).expect("fixed gate")
    }

    fn rot(kind: GateKind, qubits: Vec<usize>, angle: Angle) -> Self {
        Gate::new(kind, qubits, Some(angle)).expect("rotation gate")
    }

    pub fn h(q: usize) -> Self {
        Self::fixed(GateKind::H, vec![q])
    }
    pub fn x(q: usize) -> Self {
        Self::fixed(GateKind::X, vec![q])
    }
    pub fn y(q: usize) -> Self {
        Self::fixed(GateKind::Y, vec![q])
    }
    pub fn z(q: usize) -> Self {
        Self::fixed(GateKind::Z, vec![q])
    }
    pub fn s(q: usize) -> Self {
        Self::fixed(GateKind::S, vec![q])
    }
    pub fn sdg(q: usize) -> Self {
        Self::fixed(GateKind::Sdg, vec![q])
    }
    pub fn t(q: usize) -> Self {
        Self::fixed(GateKind::T, vec![q])
    }
    pub fn tdg(q: usize) -> Self {
        Self::fixed(GateKind::Tdg, vec![q])
    }
    pub fn measure(q: usize) -> Self {
        Self::fixed(GateKind::Measure, vec![q])
    }
    pub fn rx(q: usize, angle: impl Into<Angle>) -> Self {
        Self::rot(GateKind::RX, vec![q], angle.into())
    }
    pub fn ry(q: usize, angle: impl Into<Angle>) -> Self {
        Self::rot(GateKind::RY, vec![q], angle.into())
    }
    pub fn rz(q: usize, angle: impl Into<Angle>) -> Self {
        Self::rot(GateKind::RZ, vec![q], angle.into())
    }

    /// # Panics
    /// If `a == b`; use [`Gate::new`] for fallible construction.
    pub fn rzz(a: usize, b: usize, angle: impl Into<Angle>) -> Self {
        Self::rot(GateKind::RZZ, vec![a, b], angle.into())
    }
    pub fn cx(control: usize, target: usize) -> Self {
        Self::fixed(GateKind::CX, vec![control, target])
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Self::fixed(GateKind::CZ, vec![a, b])
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn param(&self) -> Option<&Angle> {
        self.param.as_ref()
    }

    pub fn unitary_matrix(&self) -> Option<&Matrix> {
        self.matrix.as_deref()
    }

    pub fn is_bound(&self) -> bool {
        !matches!(self.param, Some(Angle::Symbol { .. }))
    }

    /// Numeric angle of a bound rotation gate.
    pub fn angle(&self) -> Option<f64> {
        self.param.as_ref().and_then(Angle::value)
    }

    /// The same gate acting on relabelled qubits.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Gate {
        Gate {
            qubits: self.qubits.iter().map(|&q| map(q)).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn with_param(&self, param: Option<Angle>) -> Gate {
        Gate {
            param,
            ..self.clone()
        }
    }

    /// The adjoint gate. Fails on measurements and unbound parameters.
    pub fn adjoint(&self) -> Result<Gate, CircuitError> {
        use GateKind::*;
        if !self.is_bound() {
            return Err(CircuitError::Unbound(
                self.param
                    .as_ref()
                    .and_then(Angle::symbol_name)
                    .unwrap_or("")
                    .into(),
            ));
        }
        let kind = match self.kind {
            Measure => return Err(CircuitError::MeasurementNotInvertible),
            S => Sdg,
            Sdg => S,
            T => Tdg,
            Tdg => T,
            Unitary => {
                let m = self.matrix.as_ref().expect("unitary gate carries a matrix");
                return Ok(Gate {
                    matrix: Some(Arc::new(m.adjoint())),
                    ..self.clone()
                });
            }
            k => k,
        };
        let param = self.angle().map(|v| Angle::Value(-v));
        Ok(Gate {
            kind,
            param,
            ..self.clone()
        })
    }

    /// Dense local matrix of a bound gate (`None` for `Measure` or unbound).
    pub fn matrix(&self) -> Option<Matrix> {
        use GateKind::*;
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let m2 = |a: C64, b: C64, cc: C64, d: C64| Matrix::from_row_slice(2, 2, &[a, b, cc, d]);
        let h = FRAC_1_SQRT_2;
        Some(match self.kind {
            H => m2(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)),
            X => m2(z, one, one, z),
            Y => m2(z, c(0.0, -1.0), c(0.0, 1.0), z),
            Z => m2(one, z, z, -one),
            S => m2(one, z, z, c(0.0, 1.0)),
            Sdg => m2(one, z, z, c(0.0, -1.0)),
            T => m2(one, z, z, C64::from_polar(1.0, FRAC_PI_4)),
            Tdg => m2(one, z, z, C64::from_polar(1.0, -FRAC_PI_4)),
            RX => {
                let t = self.angle()? / 2.0;
                m2(
                    c(t.cos(), 0.0),
                    c(0.0, -t.sin()),
                    c(0.0, -t.sin()),
                    c(t.cos(), 0.0),
                )
            }
            RY => {
                let t = self.angle()? / 2.0;
                m2(
                    c(t.cos(), 0.0),
                    c(-t.sin(), 0.0),
                    c(t.sin(), 0.0),
                    c(t.cos(), 0.0),
                )
            }
            RZ => {
                let t = self.angle()? / 2.0;
                m2(C64::from_polar(1.0, -t), z, z, C64::from_polar(1.0, t))
            }
            RZZ => {
                let t = self.angle()? / 2.0;
                let (m, p) = (C64::from_polar(1.0, -t), C64::from_polar(1.0, t));
                Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![m, p, p, m]))
            }
            CX => {
                // control = local bit 0, target = local bit 1
                let mut m = Matrix::zeros(4, 4);
                m[(0, 0)] = one;
                m[(2, 2)] = one;
                m[(3, 1)] = one;
                m[(1, 3)] = one;
                m
            }
            CZ => Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, one, one, -one])),
            Measure => return None,
            Unitary => (**self.matrix.as_ref()?).clone(),
        })
    }
}

fn check_distinct(kind: GateKind, qubits: &[usize]) -> Result<(), CircuitError> {
    for (i, a) in qubits.iter().enumerate() {
        if qubits[i + 1..].contains(a) {
            return Err(CircuitError::RepeatedQubit { kind, qubit: *a });
        }
    }
    Ok(())
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.mnemonic())?;
        if let Some(p) = &self.param {
            write!(f, "({p})")?;
        }
        let qs: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, " {}", qs.join(","))
    }
}
