mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qstack::circuit::{Circuit, Pauli, PauliSum};
use qstack::hhl::{
    build_hhl_circuit_with, classical_solve, dft_matrix, pauli_decompose, pauli_sum_matrix, qft,
    read_system_json, solve, HhlError, HhlSteps, LinearSystem,
};
use qstack::linalg::Matrix;
use qstack::simsv::{simulate, StateVector};
use qstack::C64;
use rand::Rng;

fn cplx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn circuit_unitary(c: &Circuit) -> Matrix {
    let d = 1usize << c.n_qubits();
    let mut u = Matrix::zeros(d, d);
    for j in 0..d {
        let s = simulate(c, Some(&StateVector::basis(c.n_qubits(), j).unwrap())).unwrap();
        for i in 0..d {
            u[(i, j)] = s.amplitudes()[i];
        }
    }
    u
}

fn pauli_matrix(p: Pauli) -> Matrix {
    let (z, o, i) = (cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(0.0, 1.0));
    match p {
        Pauli::I => Matrix::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => Matrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => Matrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => Matrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Σ c ⊗_q P_q with qubit 0 as the rightmost factor.
fn dense_sum(sum: &PauliSum) -> Matrix {
    let d = 1usize << sum.n_qubits();
    let mut m = Matrix::zeros(d, d);
    for (coeff, p) in sum.terms() {
        let k = p.ops().iter().fold(Matrix::identity(1, 1), |acc, &op| {
            pauli_matrix(op).kronecker(&acc)
        });
        m += k * cplx(*coeff, 0.0);
    }
    m
}

fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> Matrix {
    let g = Matrix::from_fn(dim, dim, |_, _| {
        cplx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&g + g.adjoint()) * cplx(0.5, 0.0)
}

/// Real SPD solve by Cholesky, normalised.
fn reference_direction(sys: &LinearSystem) -> Vec<f64> {
    let a = DMatrix::from_fn(sys.a.nrows(), sys.a.ncols(), |i, j| sys.a[(i, j)].re);
    let b = nalgebra::DVector::from_iterator(sys.b.len(), sys.b.iter().map(|x| x.re));
    let x = a.cholesky().expect("SPD").solve(&b);
    let norm = x.norm();
    x.iter().map(|v| v / norm).collect()
}

/// Relative L2 distance after removing the global phase of `u`.
fn aligned_deviation(u: &[C64], v: &[f64]) -> f64 {
    let overlap: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * *b).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        cplx(1.0, 0.0)
    };
    u.iter()
        .zip(v)
        .map(|(a, b)| (a * phase - *b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[test]
fn random_spd_systems_meet_the_deviation_target() {
    let mut within = 0;
    for seed in 0..50 {
        let sys = LinearSystem::random_spd(2, 8.0, 6, seed).unwrap();
        let r = solve(&sys).unwrap();
        let dev = aligned_deviation(&r.x_quantum, &reference_direction(&sys));
        assert!(
            (dev - r.deviation).abs() < 1e-9,
            "seed {seed}: {dev} vs {}",
            r.deviation
        );
        if dev < 0.02 {
            within += 1;
        }
    }
    assert!(within >= 48, "{within}/50 under 2%");
}

#[test]
fn random_spd_has_requested_conditioning() {
    for seed in 0..20 {
        let sys = LinearSystem::random_spd(2, 8.0, 6, seed).unwrap();
        let ev = DMatrix::from_fn(4, 4, |i, j| sys.a[(i, j)].re).symmetric_eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        assert!(lo >= 1.0 - 1e-9 && hi <= 8.0 + 1e-9);
        assert!(sys.a.iter().all(|x| x.im == 0.0));
    }
}

#[test]
fn grid_aligned_eigenvalues_are_solved_exactly() {
    let mut rng = common::rng(21);
    for _ in 0..5 {
        let q = Matrix::from_fn(4, 4, |_, _| cplx(rng.random_range(-1.0..1.0), 0.0))
            .qr()
            .q();
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            cplx(1.0, 0.0),
            cplx(2.0, 0.0),
            cplx(3.0, 0.0),
            cplx(4.0, 0.0),
        ]));
        let mut a = &q * d * q.adjoint();
        a = (&a + a.adjoint()) * cplx(0.5, 0.0);
        let b: Vec<C64> = (0..4)
            .map(|_| cplx(rng.random_range(-2.0..2.0), 0.0))
            .collect();
        let sys = LinearSystem::new(a.clone(), b.clone(), 5)
            .unwrap()
            .with_scale(4.0 / 32.0)
            .unwrap();
        assert!(sys.resolution_warning().is_none());
        let r = solve(&sys).unwrap();
        assert!(r.deviation < 1e-9, "{}", r.deviation);
        let x = a.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for (est, want) in r.x_estimate.iter().zip(x.iter()) {
            assert!((est - want).norm() < 1e-8, "{est} vs {want}");
        }
    }
}

#[test]
fn identity_system_is_trivial() {
    let text = r#"{"A": [[1, 0], [0, 1]], "b": [1, 0], "m": 3}"#;
    let sys = read_system_json(text).unwrap();
    let r = solve(&sys).unwrap();
    assert!(r.deviation < 1e-12);
    assert_eq!(r.pauli_terms, 1);
    let flat =
        read_system_json(r#"{"A": [2, [0, 1], [0, -1], 2], "b": [1, [0, 1]], "m": 4}"#).unwrap();
    assert_eq!(flat.a[(0, 1)], cplx(0.0, 1.0));
}

#[test]
fn invalid_systems_are_rejected() {
    let bad = |t: &str| read_system_json(t).unwrap_err();
    assert!(matches!(
        bad(r#"{"A": [[1, 2], [0, 1]], "b": [1, 0], "m": 3}"#),
        HhlError::NotHermitian(_)
    ));
    assert!(matches!(
        bad(r#"{"A": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "b": [1, 0, 0], "m": 3}"#),
        HhlError::NotPowerOfTwo(3)
    ));
    assert!(matches!(
        bad(r#"{"A": [[1, 0], [0, 1]], "b": [0, 0], "m": 3}"#),
        HhlError::ZeroRhs
    ));
    assert!(matches!(
        bad(r#"{"A": [[1, 0], [0, 1]], "b": [1, 0], "m": 0}"#),
        HhlError::NoClock
    ));
    assert!(matches!(
        bad(r#"{"A": [[1, 0], [0, -1]], "b": [1, 0], "m": 3}"#),
        HhlError::Spectrum(..)
    ));
    assert!(matches!(
        bad(r#"{"A": [[1, 0], [0, 1]], "b": [1], "m": 3}"#),
        HhlError::Shape { .. }
    ));
    assert!(matches!(
        bad(r#"{"A": [[1, 0], [0, 1]]}"#),
        HhlError::Input(_)
    ));
    let singular = Matrix::from_row_slice(
        2,
        2,
        &[
            cplx(1.0, 0.0),
            cplx(1.0, 0.0),
            cplx(1.0, 0.0),
            cplx(1.0, 0.0),
        ],
    );
    assert!(classical_solve(&singular, &[cplx(1.0, 0.0), cplx(0.0, 0.0)]).is_err());
}

#[test]
fn qft_circuit_matches_dft() {
    for m in 1..=5 {
        let qubits: Vec<usize> = (0..m).collect();
        let u = circuit_unitary(&qft(m, &qubits).unwrap());
        let d = 1usize << m;
        let dft = Matrix::from_fn(d, d, |y, x| {
            C64::from_polar(
                1.0 / (d as f64).sqrt(),
                2.0 * std::f64::consts::PI * (x * y) as f64 / d as f64,
            )
        });
        assert!((&u - &dft).map(|x| x.norm()).max() < 1e-10, "m={m}");
        assert!((dft_matrix(m) - dft).map(|x| x.norm()).max() < 1e-12);
    }
}

#[test]
fn phase_estimation_without_rotation_is_undone() {
    let sys = LinearSystem::random_spd(1, 4.0, 4, 7).unwrap();
    let c = build_hhl_circuit_with(
        &sys,
        HhlSteps {
            rotation: false,
            uncompute: true,
        },
    )
    .unwrap();
    let s = simulate(&c, None).unwrap();
    let b = sys.b_normalized();
    // clock and ancilla return to zero, system holds |b⟩
    let mut want = vec![cplx(0.0, 0.0); 1 << sys.total_qubits()];
    want[..2].copy_from_slice(&b);
    let want = StateVector::from_amplitudes(want).unwrap();
    assert!((s.fidelity(&want) - 1.0).abs() < 1e-10);
}

#[test]
fn pauli_decomposition_matches_dense_oracle() {
    let mut rng = common::rng(31);
    for n in 1..=3 {
        for _ in 0..5 {
            let a = random_hermitian(&mut rng, 1 << n);
            let sum = pauli_decompose(&a).unwrap();
            assert!((dense_sum(&sum) - &a).map(|x| x.norm()).max() < 1e-12);
            assert!((pauli_sum_matrix(&sum) - &a).map(|x| x.norm()).max() < 1e-12);
        }
    }
    let diag = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        cplx(3.0, 0.0),
        cplx(1.0, 0.0),
    ]));
    let sum = pauli_decompose(&diag).unwrap();
    assert_eq!(sum.terms().len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_round_trip(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = common::rng(seed);
        let a = random_hermitian(&mut rng, 1 << n);
        let back = pauli_sum_matrix(&pauli_decompose(&a).unwrap());
        prop_assert!((back - a).map(|x| x.norm()).max() < 1e-12);
    }

    #[test]
    fn hhl_output_is_normalised(seed in any::<u64>()) {
        let sys = LinearSystem::random_spd(1, 4.0, 4, seed).unwrap();
        let r = solve(&sys).unwrap();
        let norm: f64 = r.x_quantum.iter().map(|x| x.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
        prop_assert!(r.success_prob > 0.0 && r.success_prob <= 1.0 + 1e-12);
        prop_assert!(r.deviation >= 0.0 && r.deviation <= 2.0);
    }
}
