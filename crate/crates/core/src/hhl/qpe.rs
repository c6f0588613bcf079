use std::f64::consts::PI;

use crate::circuit::{Circuit, CircuitError, Gate};
use crate::linalg::{c, Matrix};

/// `diag(1, 1, 1, e^{iθ})` on `(a, b)`.
pub fn controlled_phase(a: usize, b: usize, theta: f64) -> Gate {
    let mut m = Matrix::identity(4, 4);
    m[(3, 3)] = crate::C64::from_polar(1.0, theta);
    Gate::unitary(vec![a, b], m).expect("diagonal phase is unitary")
}

/// Block-diagonal `I ⊕ u` on `[targets…, control]`.
pub fn controlled_unitary(
    control: usize,
    targets: &[usize],
    u: &Matrix,
) -> Result<Gate, CircuitError> {
    let d = u.nrows();
    let mut m = Matrix::identity(2 * d, 2 * d);
    m.view_mut((d, d), (d, d)).copy_from(u);
    let mut qubits = targets.to_vec();
    qubits.push(control);
    Gate::unitary(qubits, m)
}

fn swap(c: &mut Circuit, a: usize, b: usize) -> Result<(), CircuitError> {
    c.append(Gate::cx(a, b))?;
    c.append(Gate::cx(b, a))?;
    c.append(Gate::cx(a, b))?;
    Ok(())
}

/// Quantum Fourier transform `|x⟩ ↦ 2^{−m/2} Σ_y e^{2πi xy/2^m} |y⟩` on
/// `qubits`, where `qubits[i]` carries bit `i` of `x`.
pub fn qft(n_qubits: usize, qubits: &[usize]) -> Result<Circuit, CircuitError> {
    let m = qubits.len();
    let mut circ = Circuit::new(n_qubits)?;
    for q in (0..m).rev() {
        circ.append(Gate::h(qubits[q]))?;
        for k in (0..q).rev() {
            let theta = 2.0 * PI / (1u64 << (q - k + 1)) as f64;
            circ.append(controlled_phase(qubits[k], qubits[q], theta))?;
        }
    }
    for q in 0..m / 2 {
        swap(&mut circ, qubits[q], qubits[m - 1 - q])?;
    }
    Ok(circ)
}

pub fn inverse_qft(n_qubits: usize, qubits: &[usize]) -> Result<Circuit, CircuitError> {
    qft(n_qubits, qubits)?.inverse()
}

/// Dense `2^m × 2^m` DFT matrix with entries `e^{2πi xy/2^m} / 2^{m/2}`.
pub fn dft_matrix(m: usize) -> Matrix {
    let d = 1usize << m;
    let norm = (d as f64).sqrt().recip();
    Matrix::from_fn(d, d, |y, x| {
        crate::C64::from_polar(norm, 2.0 * PI * ((x * y) % d) as f64 / d as f64)
    })
}

/// Eigenvalue-inversion rotation on `[clock…, ancilla]`: for clock value
/// `j ≥ 1`, `RY(2·arcsin(1/j))` on the ancilla; `j = 0` is left alone.
pub fn inversion_rotation(clock: &[usize], ancilla: usize) -> Result<Gate, CircuitError> {
    let d = 1usize << clock.len();
    let mut m = Matrix::zeros(2 * d, 2 * d);
    for j in 0..d {
        let (s, co) = if j == 0 {
            (0.0, 1.0)
        } else {
            (1.0 / j as f64, (1.0 - 1.0 / (j * j) as f64).sqrt())
        };
        m[(j, j)] = c(co, 0.0);
        m[(j, j + d)] = c(-s, 0.0);
        m[(j + d, j)] = c(s, 0.0);
        m[(j + d, j + d)] = c(co, 0.0);
    }
    let mut qubits = clock.to_vec();
    qubits.push(ancilla);
    Gate::unitary(qubits, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simsv::{simulate, StateVector};

    #[test]
    fn qft_matches_dft() {
        for m in 1..=4 {
            let qs: Vec<usize> = (0..m).collect();
            let circ = qft(m, &qs).unwrap();
            let dft = dft_matrix(m);
            for x in 0..1usize << m {
                let out = simulate(&circ, Some(&StateVector::basis(m, x).unwrap())).unwrap();
                for (y, a) in out.amplitudes().iter().enumerate() {
                    assert!((a - dft[(y, x)]).norm() < 1e-12, "m={m} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn qft_on_scattered_qubits() {
        let qs = [3, 0, 2];
        let circ = qft(4, &qs)
            .unwrap()
            .compose(&inverse_qft(4, &qs).unwrap())
            .unwrap();
        let s0 = StateVector::basis(4, 0b1011).unwrap();
        assert!(simulate(&circ, Some(&s0)).unwrap().fidelity(&s0) > 1.0 - 1e-12);
    }
}
