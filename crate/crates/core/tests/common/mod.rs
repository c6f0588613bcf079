#![allow(dead_code)]

use qstack::circuit::{Circuit, Gate, PauliString, PauliSum};
use qstack::linalg::Matrix;
use qstack::simsv::StateVector;
use qstack::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn angle<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..4) {
        0 => std::f64::consts::PI / rng.random_range(1..=8) as f64,
        _ => rng.random_range(-6.3..6.3),
    }
}

pub fn one_qubit_gate<R: Rng>(rng: &mut R, q: usize) -> Gate {
    match rng.random_range(0..11) {
        0 => Gate::h(q),
        1 => Gate::x(q),
        2 => Gate::y(q),
        3 => Gate::z(q),
        4 => Gate::s(q),
        5 => Gate::sdg(q),
        6 => Gate::t(q),
        7 => Gate::tdg(q),
        8 => Gate::rx(q, angle(rng)),
        9 => Gate::ry(q, angle(rng)),
        _ => Gate::rz(q, angle(rng)),
    }
}

pub fn two_qubit_gate<R: Rng>(rng: &mut R, a: usize, b: usize) -> Gate {
    match rng.random_range(0..3) {
        0 => Gate::cx(a, b),
        1 => Gate::cz(a, b),
        _ => Gate::rzz(a, b, angle(rng)),
    }
}

/// Random circuit over the standard gate set. Two-qubit gates act on
/// neighbours when `nearest` is set and on any pair otherwise.
pub fn random_circuit<R: Rng>(
    rng: &mut R,
    n: usize,
    len: usize,
    nearest: bool,
    measure: bool,
) -> Circuit {
    let mut c = Circuit::new(n).unwrap();
    for _ in 0..len {
        let g = if n >= 2 && rng.random_bool(0.4) {
            let (a, b) = if nearest {
                let a = rng.random_range(0..n - 1);
                if rng.random_bool(0.5) {
                    (a, a + 1)
                } else {
                    (a + 1, a)
                }
            } else {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            };
            two_qubit_gate(rng, a, b)
        } else if measure && rng.random_bool(0.05) {
            Gate::measure(rng.random_range(0..n))
        } else {
            let q = rng.random_range(0..n);
            one_qubit_gate(rng, q)
        };
        c.append(g).unwrap();
    }
    c
}

/// Circuit whose only gate across bond `bond` is a single two-qubit gate.
pub fn single_cut_circuit<R: Rng>(rng: &mut R, n: usize, bond: usize, len: usize) -> Circuit {
    let mut c = Circuit::new(n).unwrap();
    let cut_at = rng.random_range(0..len.max(1));
    let side = |rng: &mut R, lo: usize, hi: usize| -> Gate {
        if hi - lo >= 2 && rng.random_bool(0.4) {
            let a = rng.random_range(lo..hi - 1);
            two_qubit_gate(rng, a, a + 1)
        } else {
            let q = rng.random_range(lo..hi);
            one_qubit_gate(rng, q)
        }
    };
    for i in 0..len {
        if i == cut_at {
            let (a, b) = (rng.random_range(0..=bond), rng.random_range(bond + 1..n));
            let g = if rng.random_bool(0.5) {
                two_qubit_gate(rng, a, b)
            } else {
                two_qubit_gate(rng, b, a)
            };
            c.append(g).unwrap();
        }
        let g = if rng.random_bool(0.5) {
            side(rng, 0, bond + 1)
        } else {
            side(rng, bond + 1, n)
        };
        c.append(g).unwrap();
    }
    c
}

pub fn random_pauli_sum<R: Rng>(rng: &mut R, n: usize, terms: usize) -> PauliSum {
    let labels = ['I', 'X', 'Y', 'Z'];
    let mut sum = PauliSum::zero(n);
    for _ in 0..terms {
        let label: String = (0..n).map(|_| labels[rng.random_range(0..4)]).collect();
        sum.add_term(
            rng.random_range(-1.0..1.0),
            label.parse::<PauliString>().unwrap(),
        )
        .unwrap();
    }
    sum
}

pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> StateVector {
    let amps: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

/// Dense matrix of a single-qubit operator acting on qubit `q` of `n`.
pub fn embed_1q(op: &Matrix, q: usize, n: usize) -> Matrix {
    let d = 1usize << n;
    Matrix::from_fn(d, d, |r, c| {
        if (r ^ c) & !(1 << q) != 0 {
            C64::new(0.0, 0.0)
        } else {
            op[((r >> q) & 1, (c >> q) & 1)]
        }
    })
}

/// Entanglement entropy (bits) of qubits `0..=bond` versus the rest, from
/// the reduced density matrix of a dense state.
pub fn bipartite_entropy(state: &StateVector, bond: usize) -> f64 {
    let n = state.n_qubits();
    let left = bond + 1;
    let (dl, dr) = (1usize << left, 1usize << (n - left));
    let psi = Matrix::from_fn(dl, dr, |l, r| state.amplitudes()[l | (r << left)]);
    let rho = &psi * psi.adjoint();
    rho.symmetric_eigenvalues()
        .iter()
        .filter(|&&p| p > 1e-15)
        .map(|&p| -p * p.log2())
        .sum()
}
