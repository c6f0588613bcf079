use crate::circuit::{Gate, GateKind};
use crate::linalg::{c, kron, Matrix};

use super::KnitError;

/// Residual allowed in the channel-identity check.
pub const CHANNEL_TOL: f64 = 1e-8;

/// Operation on one wire of a cut gate. Gates are stored on qubit 0 and
/// relocated when a fragment is simulated.
#[derive(Clone, Debug)]
pub enum LocalOp {
    Gate(Gate),
    /// Z-basis measurement; the post-measurement state continues and the
    /// term is weighted by `(-1)^outcome`.
    MeasureSign,
}

impl LocalOp {
    fn gate(g: Gate) -> Self {
        LocalOp::Gate(g)
    }
}

#[derive(Clone, Debug)]
pub struct CutTerm {
    pub coefficient: f64,
    /// Acts on the gate's first qubit.
    pub left_ops: Vec<LocalOp>,
    /// Acts on the gate's second qubit.
    pub right_ops: Vec<LocalOp>,
}

impl CutTerm {
    pub fn has_measurement(&self) -> bool {
        self.left_ops
            .iter()
            .chain(&self.right_ops)
            .any(|op| matches!(op, LocalOp::MeasureSign))
    }
}

#[derive(Clone, Debug)]
pub struct CutGateDecomposition {
    pub original: Gate,
    pub terms: Vec<CutTerm>,
    pub gamma: f64,
    /// Largest deviation found by the channel-identity check.
    pub residual: f64,
}

/// Quasiprobability decomposition of an RZZ, CZ or CX gate into local
/// operations. The result is checked against the gate's channel on every
/// two-qubit matrix unit.
pub fn decompose_cut_gate(gate: &Gate) -> Result<CutGateDecomposition, KnitError> {
    let terms = match gate.kind() {
        GateKind::RZZ => {
            let phi = gate.angle().ok_or(KnitError::Unbound)?;
            zz_terms(-phi / 2.0, &[], &[], &[], &[])
        }
        GateKind::CZ => {
            let fix = [Gate::rz(0, std::f64::consts::FRAC_PI_2)];
            zz_terms(std::f64::consts::FRAC_PI_4, &[], &fix, &[], &fix)
        }
        GateKind::CX => {
            let fix = [Gate::rz(0, std::f64::consts::FRAC_PI_2)];
            let target_post = [Gate::rz(0, std::f64::consts::FRAC_PI_2), Gate::h(0)];
            zz_terms(
                std::f64::consts::FRAC_PI_4,
                &[],
                &fix,
                &[Gate::h(0)],
                &target_post,
            )
        }
        other => return Err(KnitError::Unsupported(other.mnemonic().to_string())),
    };
    let gamma = terms.iter().map(|t| t.coefficient.abs()).sum();
    let residual = channel_residual(gate, &terms)?;
    if residual >= CHANNEL_TOL {
        return Err(KnitError::ChannelCheck(residual));
    }
    Ok(CutGateDecomposition {
        original: gate.clone(),
        terms,
        gamma,
        residual,
    })
}

/// Terms for `exp(iθ Z⊗Z)` wrapped by local gates before and after:
///
/// `c²·id + s²·(Z⊗Z) + cs·(R₊−R₋)⊗M + cs·M⊗(R₊−R₋)`
///
/// with `c = cos θ`, `s = sin θ`, `R± = e^{±iπ/4 Z}` and `M` the signed
/// Z measurement.
fn zz_terms(
    theta: f64,
    left_pre: &[Gate],
    left_post: &[Gate],
    right_pre: &[Gate],
    right_post: &[Gate],
) -> Vec<CutTerm> {
    let (s, co) = theta.sin_cos();
    let r_plus = || LocalOp::gate(Gate::rz(0, -std::f64::consts::FRAC_PI_2));
    let r_minus = || LocalOp::gate(Gate::rz(0, std::f64::consts::FRAC_PI_2));
    let z = || LocalOp::gate(Gate::z(0));
    let raw: Vec<(f64, Vec<LocalOp>, Vec<LocalOp>)> = vec![
        (co * co, vec![], vec![]),
        (s * s, vec![z()], vec![z()]),
        (co * s, vec![r_plus()], vec![LocalOp::MeasureSign]),
        (-co * s, vec![r_minus()], vec![LocalOp::MeasureSign]),
        (co * s, vec![LocalOp::MeasureSign], vec![r_plus()]),
        (-co * s, vec![LocalOp::MeasureSign], vec![r_minus()]),
    ];
    let wrap = |pre: &[Gate], mid: Vec<LocalOp>, post: &[Gate]| -> Vec<LocalOp> {
        pre.iter()
            .cloned()
            .map(LocalOp::Gate)
            .chain(mid)
            .chain(post.iter().cloned().map(LocalOp::Gate))
            .collect()
    };
    raw.into_iter()
        .filter(|(coef, _, _)| *coef != 0.0)
        .map(|(coefficient, l, r)| CutTerm {
            coefficient,
            left_ops: wrap(left_pre, l, left_post),
            right_ops: wrap(right_pre, r, right_post),
        })
        .collect()
}

/// Applies a wire's operations to a two-qubit density matrix; `bit` selects
/// which local qubit (0 = first gate operand).
fn apply_ops(rho: &Matrix, ops: &[LocalOp], bit: usize) -> Result<Matrix, KnitError> {
    let id = Matrix::identity(2, 2);
    let mut rho = rho.clone();
    for op in ops {
        match op {
            LocalOp::Gate(g) => {
                let m = g.matrix().ok_or(KnitError::Unbound)?;
                let u = if bit == 0 {
                    kron(&id, &m)
                } else {
                    kron(&m, &id)
                };
                rho = &u * rho * u.adjoint();
            }
            LocalOp::MeasureSign => {
                let p = |o: usize| {
                    let mut pm = Matrix::zeros(2, 2);
                    pm[(o, o)] = c(1.0, 0.0);
                    if bit == 0 {
                        kron(&id, &pm)
                    } else {
                        kron(&pm, &id)
                    }
                };
                let (p0, p1) = (p(0), p(1));
                rho = &p0 * &rho * &p0 - &p1 * &rho * &p1;
            }
        }
    }
    Ok(rho)
}

fn channel_residual(gate: &Gate, terms: &[CutTerm]) -> Result<f64, KnitError> {
    let u = gate.matrix().ok_or(KnitError::Unbound)?;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut rho = Matrix::zeros(4, 4);
            rho[(i, j)] = c(1.0, 0.0);
            let expected = &u * &rho * u.adjoint();
            let mut got = Matrix::zeros(4, 4);
            for t in terms {
                let out = apply_ops(&apply_ops(&rho, &t.left_ops, 0)?, &t.right_ops, 1)?;
                got += out * c(t.coefficient, 0.0);
            }
            worst = worst.max(crate::linalg::max_abs_diff(&expected, &got));
        }
    }
    Ok(worst)
}
