mod common;

use proptest::prelude::*;
use qstack::circuit::{Circuit, Pauli};
use qstack::linalg::{kron, Matrix};
use qstack::simsv::{expectation, sample, simulate, StateVector};
use qstack::C64;

/// Dense unitary of a circuit built gate by gate from the gates' own
/// matrices, with explicit Kronecker embedding.
fn dense_unitary(c: &Circuit) -> Matrix {
    let n = c.n_qubits();
    let d = 1usize << n;
    let mut u = Matrix::identity(d, d);
    for g in c.gates() {
        let Some(m) = g.matrix() else { continue };
        let qs = g.qubits();
        let k = qs.len();
        let full = Matrix::from_fn(d, d, |r, col| {
            let rest = !qs.iter().fold(0usize, |acc, &q| acc | 1 << q);
            if (r ^ col) & rest != 0 {
                return C64::new(0.0, 0.0);
            }
            let local = |x: usize| (0..k).fold(0usize, |acc, i| acc | ((x >> qs[i]) & 1) << i);
            m[(local(r), local(col))]
        });
        u = full * u;
    }
    u
}

#[test]
fn statevector_matches_dense_unitary() {
    let mut rng = common::rng(5);
    for n in 1..=6 {
        for _ in 0..10 {
            let c = common::random_circuit(&mut rng, n, 30, false, false);
            let u = dense_unitary(&c);
            let out = simulate(&c, None).unwrap();
            for (i, a) in out.amplitudes().iter().enumerate() {
                assert!((a - u[(i, 0)]).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn pauli_expectation_matches_dense_operator() {
    let mut rng = common::rng(8);
    let x = Matrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    let y = Matrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    );
    let z = Matrix::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ],
    );
    let id = Matrix::identity(2, 2);
    for n in 1..=5 {
        let state = common::random_state(&mut rng, n);
        let obs = common::random_pauli_sum(&mut rng, n, 6);
        let mut dense = Matrix::zeros(1 << n, 1 << n);
        for (coef, p) in obs.terms() {
            let mut m = Matrix::identity(1, 1);
            for q in (0..n).rev() {
                let op = match p.op(q) {
                    Pauli::X => &x,
                    Pauli::Y => &y,
                    Pauli::Z => &z,
                    Pauli::I => &id,
                };
                m = kron(&m, op);
            }
            dense += m * C64::new(*coef, 0.0);
        }
        let psi = Matrix::from_column_slice(1 << n, 1, state.amplitudes());
        let want = (psi.adjoint() * &dense * &psi)[(0, 0)].re;
        assert!((expectation(&state, &obs).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn sample_counts_follow_probabilities() {
    let c =
        qstack::qasm::parse("OPENQASM 2.0;\nqreg q[2];\nry(pi/3) q[0];\ncx q[0],q[1];\n").unwrap();
    let s = simulate(&c, None).unwrap();
    let counts = sample(&s, 40_000, 1);
    assert_eq!(counts.values().sum::<usize>(), 40_000);
    let p11 = counts["11"] as f64 / 40_000.0;
    assert!((p11 - 0.25).abs() < 0.01);
    assert!(!counts.contains_key("01") && !counts.contains_key("10"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norm_is_preserved(seed in any::<u64>(), n in 1usize..=10, len in 0usize..80) {
        let mut rng = common::rng(seed);
        let c = common::random_circuit(&mut rng, n, len, false, true);
        let s = simulate(&c, Some(&common::random_state(&mut rng, n))).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_undoes_the_circuit(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = common::rng(seed);
        let c = common::random_circuit(&mut rng, n, 40, false, false);
        let s0 = common::random_state(&mut rng, n);
        let back = simulate(&c.compose(&c.inverse().unwrap()).unwrap(), Some(&s0)).unwrap();
        prop_assert!(back.fidelity(&s0) > 1.0 - 1e-10);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), shots in 1usize..500) {
        let s = StateVector::from_amplitudes(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        prop_assert_eq!(sample(&s, shots, seed), sample(&s, shots, seed));
    }
}
