mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use qstack::circuit::{Circuit, Gate, Pauli, PauliString, PauliSum};
use qstack::knit::{
    adaptive_plan, baseline_plan, build_spinchain_circuit, decompose_cut_gate, default_checkpoints,
    knit_execute, plan_for_bond, Constraints, Disorder, KnitError, KnitMode, LocalOp,
    SpinChainSpec,
};
use qstack::linalg::Matrix;
use qstack::simmps::{entropy_profile, MpsConfig};
use qstack::simsv::{expectation, simulate, StateVector};
use qstack::C64;
use rand::Rng;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn z_on(n: usize, q: usize) -> PauliSum {
    PauliSum::from_terms(n, [(1.0, PauliString::from_sparse(n, &[(q, Pauli::Z)]))]).unwrap()
}

/// Gate unitary on two qubits, column by column from the statevector simulator.
fn two_qubit_unitary(gate: &Gate) -> Matrix {
    let mut u = Matrix::zeros(4, 4);
    for j in 0..4 {
        let mut s = StateVector::basis(2, j).unwrap();
        s.apply(gate).unwrap();
        for i in 0..4 {
            u[(i, j)] = s.amplitudes()[i];
        }
    }
    u
}

fn apply_wire(rho: &Matrix, ops: &[LocalOp], q: usize) -> Matrix {
    let mut rho = rho.clone();
    for op in ops {
        match op {
            LocalOp::Gate(g) => {
                let u = common::embed_1q(&g.matrix().unwrap(), q, 2);
                rho = &u * rho * u.adjoint();
            }
            LocalOp::MeasureSign => {
                let z = common::embed_1q(
                    &Matrix::from_row_slice(
                        2,
                        2,
                        &[one(), C64::new(0.0, 0.0), C64::new(0.0, 0.0), -one()],
                    ),
                    q,
                    2,
                );
                let p0 = (Matrix::identity(4, 4) + &z) * C64::new(0.5, 0.0);
                let p1 = (Matrix::identity(4, 4) - &z) * C64::new(0.5, 0.0);
                rho = &p0 * &rho * &p0 - &p1 * &rho * &p1;
            }
        }
    }
    rho
}

fn channel_deviation(gate: &Gate) -> f64 {
    let d = decompose_cut_gate(gate).unwrap();
    let u = two_qubit_unitary(gate);
    let (qa, qb) = (gate.qubits()[0], gate.qubits()[1]);
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut rho = Matrix::zeros(4, 4);
            rho[(i, j)] = one();
            let expected = &u * &rho * u.adjoint();
            let mut got = Matrix::zeros(4, 4);
            for t in &d.terms {
                got += apply_wire(&apply_wire(&rho, &t.left_ops, qa), &t.right_ops, qb)
                    * C64::new(t.coefficient, 0.0);
            }
            worst = worst.max((expected - got).map(|x| x.norm()).max());
        }
    }
    worst
}

#[test]
fn decompositions_reproduce_the_gate_channel() {
    let mut gates = vec![
        Gate::cx(0, 1),
        Gate::cx(1, 0),
        Gate::cz(0, 1),
        Gate::cz(1, 0),
    ];
    let mut rng = common::rng(3);
    for _ in 0..40 {
        let phi = common::angle(&mut rng);
        gates.push(if rng.random_bool(0.5) {
            Gate::rzz(0, 1, phi)
        } else {
            Gate::rzz(1, 0, phi)
        });
    }
    for g in &gates {
        let dev = channel_deviation(g);
        assert!(dev < 1e-8, "{g:?}: {dev:e}");
        let d = decompose_cut_gate(g).unwrap();
        assert!(d.residual < 1e-8);
        let sum: f64 = d.terms.iter().map(|t| t.coefficient.abs()).sum();
        assert!((d.gamma - sum).abs() < 1e-12);
    }
}

#[test]
fn gamma_values() {
    assert_eq!(
        decompose_cut_gate(&Gate::rzz(0, 1, 0.0)).unwrap().gamma,
        1.0
    );
    assert!(
        (decompose_cut_gate(&Gate::rzz(0, 1, 2.0 * PI))
            .unwrap()
            .gamma
            - 1.0)
            .abs()
            < 1e-12
    );
    for g in [Gate::cx(0, 1), Gate::cz(0, 1), Gate::rzz(0, 1, PI / 2.0)] {
        let d = decompose_cut_gate(&g).unwrap();
        let sum: f64 = d.terms.iter().map(|t| t.coefficient.abs()).sum();
        assert!((sum - 3.0).abs() < 1e-12);
        assert!((d.gamma - sum).abs() < 1e-15);
    }
    assert!(matches!(
        decompose_cut_gate(&Gate::h(0)),
        Err(KnitError::Unsupported(_))
    ));
}

#[test]
fn gamma_is_continuous_and_monotone_in_sine() {
    let steps = 2000;
    let grid: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / steps as f64;
            (
                theta,
                decompose_cut_gate(&Gate::rzz(0, 1, theta)).unwrap().gamma,
            )
        })
        .collect();
    let h = 2.0 * PI / steps as f64;
    for w in grid.windows(2) {
        assert!((w[1].1 - w[0].1).abs() <= 2.0 * h + 1e-12);
    }
    let quarter: Vec<f64> = grid
        .iter()
        .filter(|(t, _)| *t <= PI / 2.0)
        .map(|&(_, g)| g)
        .collect();
    assert!(quarter.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let mut by_sine = grid.clone();
    by_sine.sort_by(|a, b| a.0.sin().abs().total_cmp(&b.0.sin().abs()));
    assert!(by_sine.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12));
}

#[test]
fn two_qubit_example() {
    let c = Circuit::new(2)
        .unwrap()
        .with(Gate::h(0))
        .unwrap()
        .with(Gate::rzz(0, 1, 0.7))
        .unwrap();
    let plan = plan_for_bond(&c, 0).unwrap();
    let zz = PauliSum::from_labels(&[(1.0, "ZZ"), (0.5, "XY"), (0.25, "IX")]).unwrap();
    let got = knit_execute(&c, &plan, &zz, KnitMode::Exact).unwrap();
    let want = expectation(&simulate(&c, None).unwrap(), &zz).unwrap();
    assert!((got.value - want).abs() < 1e-8);
    assert!((got.per_term_values.iter().sum::<f64>() - got.value).abs() < 1e-12);
}

#[test]
fn exact_mode_matches_statevector_on_single_cut_circuits() {
    let mut rng = common::rng(2024);
    for _ in 0..100 {
        let n = rng.random_range(2..=14);
        let bond = rng.random_range(0..n - 1);
        let c = common::single_cut_circuit(&mut rng, n, bond, 3 * n);
        let plan = plan_for_bond(&c, bond).unwrap();
        assert_eq!(plan.cut_gates.len(), 1);
        let obs = common::random_pauli_sum(&mut rng, n, 3);
        let got = knit_execute(&c, &plan, &obs, KnitMode::Exact)
            .unwrap()
            .value;
        let want = expectation(&simulate(&c, None).unwrap(), &obs).unwrap();
        assert!(
            (got - want).abs() < 1e-8,
            "n={n} bond={bond}: {got} vs {want}"
        );
    }
}

#[test]
fn multiple_cut_gates_recombine_exactly() {
    let mut rng = common::rng(8);
    for _ in 0..10 {
        let n = rng.random_range(3..=8);
        let c = common::random_circuit(&mut rng, n, 4 * n, true, false);
        let bond = rng.random_range(0..n - 1);
        let plan = plan_for_bond(&c, bond).unwrap();
        if plan.cut_gates.len() > 4 {
            continue;
        }
        let obs = common::random_pauli_sum(&mut rng, n, 2);
        let got = knit_execute(&c, &plan, &obs, KnitMode::Exact)
            .unwrap()
            .value;
        let want = expectation(&simulate(&c, None).unwrap(), &obs).unwrap();
        assert!((got - want).abs() < 1e-8);
    }
}

#[test]
fn zero_cut_plan_is_a_product() {
    let mut rng = common::rng(5);
    let (na, nb) = (3, 4);
    let left = common::random_circuit(&mut rng, na, 15, true, false);
    let right = common::random_circuit(&mut rng, nb, 15, true, false);
    let mut c = Circuit::new(na + nb).unwrap();
    for (l, r) in left.gates().iter().zip(right.gates()) {
        c.append(l.clone()).unwrap();
        let q: Vec<usize> = r.qubits().iter().map(|q| q + na).collect();
        c.append(Gate::new(r.kind(), q, r.param().cloned()).unwrap())
            .unwrap();
    }
    let plan = plan_for_bond(&c, na - 1).unwrap();
    assert!(plan.cut_gates.is_empty());
    assert_eq!(plan.total_overhead, 1.0);
    let pa: PauliString = "XZY".parse().unwrap();
    let pb: PauliString = "ZIXZ".parse().unwrap();
    let full: PauliString = "ZIXZXZY".parse().unwrap();
    let obs = PauliSum::from_terms(na + nb, [(1.0, full)]).unwrap();
    let got = knit_execute(&c, &plan, &obs, KnitMode::Exact)
        .unwrap()
        .value;
    let ea = simulate(&left, None)
        .unwrap()
        .pauli_expectation(&pa)
        .unwrap();
    let eb = simulate(&right, None)
        .unwrap()
        .pauli_expectation(&pb)
        .unwrap();
    assert!((got - ea * eb).abs() < 1e-12);
}

fn kron_all(ops: &[DMatrix<f64>]) -> DMatrix<f64> {
    ops.iter()
        .fold(DMatrix::from_element(1, 1, 1.0), |acc, m| m.kronecker(&acc))
}

/// Dense Ising Hamiltonian with qubit 0 as the least significant factor.
fn dense_ising(spec: &SpinChainSpec) -> DMatrix<f64> {
    let n = spec.n_qubits;
    let id = DMatrix::<f64>::identity(2, 2);
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let on = |pairs: &[(usize, &DMatrix<f64>)]| {
        let ops: Vec<DMatrix<f64>> = (0..n)
            .map(|q| {
                pairs
                    .iter()
                    .find(|(p, _)| *p == q)
                    .map_or(id.clone(), |(_, m)| (*m).clone())
            })
            .collect();
        kron_all(&ops)
    };
    let d = 1 << n;
    let mut h = DMatrix::<f64>::zeros(d, d);
    for i in 0..n - 1 {
        h += on(&[(i, &z), (i + 1, &z)]) * spec.j[i];
    }
    for q in 0..n {
        h += on(&[(q, &x)]) * spec.h[q] + on(&[(q, &z)]) * spec.g[q];
    }
    h
}

fn exact_state(spec: &SpinChainSpec) -> StateVector {
    let eig = dense_ising(spec).symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = v.nrows();
    let psi: Vec<C64> = (0..d)
        .map(|r| {
            (0..d)
                .map(|k| C64::from_polar(v[(r, k)] * v[(0, k)], -eig.eigenvalues[k] * spec.t))
                .sum()
        })
        .collect();
    StateVector::from_amplitudes(psi).unwrap()
}

#[test]
fn trotter_error_is_first_order() {
    let j = vec![0.9, 0.6];
    let h = vec![0.7, 0.5, 0.8];
    let g = vec![0.3, 0.2, 0.4];
    let errors = |steps: usize| {
        let spec = SpinChainSpec::new(3, j.clone(), h.clone(), g.clone(), 1.0, steps).unwrap();
        let trotter = simulate(&build_spinchain_circuit(&spec), None).unwrap();
        let exact = exact_state(&spec);
        let diff = |p: &PauliString| {
            (trotter.pauli_expectation(p).unwrap() - exact.pauli_expectation(p).unwrap()).abs()
        };
        let dist: f64 = trotter
            .amplitudes()
            .iter()
            .zip(exact.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        (
            diff(&"IZI".parse().unwrap()),
            diff(&"IYI".parse().unwrap()),
            dist,
        )
    };
    let e: Vec<(f64, f64, f64)> = [20, 40, 80].into_iter().map(errors).collect();
    for w in e.windows(2) {
        let (z, y, d) = (w[0].0 / w[1].0, w[0].1 / w[1].1, w[0].2 / w[1].2);
        assert!(z > 1.7, "Z ratio {z}");
        assert!((1.7..2.3).contains(&y), "Y ratio {y}");
        assert!((1.7..2.3).contains(&d), "state ratio {d}");
    }
    assert!(e[0].0 > 1e-6 && e[0].1 > 1e-4);
}

#[test]
fn spinchain_construction() {
    let spec = SpinChainSpec::new(2, vec![1.0], vec![0.0; 2], vec![0.0; 2], 0.5, 1).unwrap();
    let c = build_spinchain_circuit(&spec);
    assert_eq!(c.gates(), &[Gate::rzz(0, 1, 1.0)]);
    let quiet = SpinChainSpec::new(4, vec![0.0; 3], vec![0.0; 4], vec![0.0; 4], 2.0, 5).unwrap();
    let s = simulate(&build_spinchain_circuit(&quiet), None).unwrap();
    assert!((s.fidelity(&StateVector::zero(4).unwrap()) - 1.0).abs() < 1e-15);
}

#[test]
fn trotter_chain_with_one_cut_bond() {
    let spec = SpinChainSpec::disordered(12, 0.6, 3, &Disorder::strong(17)).unwrap();
    let c = build_spinchain_circuit(&spec);
    let plan = baseline_plan(&c).unwrap();
    assert_eq!(plan.cut_bond, 5);
    assert_eq!(plan.cut_gates.len(), 3);
    let obs = z_on(12, 3);
    let got = knit_execute(&c, &plan, &obs, KnitMode::Exact).unwrap();
    let want = expectation(&simulate(&c, None).unwrap(), &obs).unwrap();
    assert!((got.value - want).abs() < 1e-8);
    let overhead: f64 = plan
        .decompositions
        .iter()
        .map(|d| d.gamma * d.gamma)
        .product();
    assert!((got.overhead - overhead).abs() < 1e-9 * overhead);
}

fn prefix(c: &Circuit, k: usize) -> Circuit {
    let mut p = Circuit::new(c.n_qubits()).unwrap();
    for g in &c.gates()[..k] {
        p.append(g.clone()).unwrap();
    }
    p
}

/// Best bond by direct scan of reduced-density-matrix entropies.
fn scan_bond(c: &Circuit, constraints: &Constraints) -> Option<usize> {
    let n = c.n_qubits();
    let states: Vec<StateVector> = default_checkpoints(c.len())
        .into_iter()
        .map(|k| simulate(&prefix(c, k), None).unwrap())
        .collect();
    let score = |k: usize| {
        states
            .iter()
            .map(|s| common::bipartite_entropy(s, k))
            .fold(0.0, f64::max)
    };
    let imbalance = |k: usize| (k + 1).abs_diff(n - k - 1);
    let mut best: Option<(usize, f64)> = None;
    for k in (0..n - 1).filter(|&k| constraints.allows(n, k)) {
        let s = score(k);
        best = match best {
            Some((b, sb))
                if !(s < sb - 1e-9 || ((s - sb).abs() <= 1e-9 && imbalance(k) < imbalance(b))) =>
            {
                Some((b, sb))
            }
            _ => Some((k, s)),
        };
    }
    best.map(|(b, _)| b)
}

#[test]
fn adaptive_plan_matches_entropy_scan() {
    let mut rng = common::rng(77);
    for i in 0..40 {
        let n = rng.random_range(3..=8);
        let c = common::random_circuit(&mut rng, n, 3 * n, true, false);
        let constraints = if i % 2 == 0 {
            Constraints::unconstrained()
        } else {
            Constraints::new(n - 1, n / 2)
        };
        let profile =
            entropy_profile(&c, &default_checkpoints(c.len()), MpsConfig::exact()).unwrap();
        let got = adaptive_plan(&c, &profile, &constraints)
            .map(|p| p.cut_bond)
            .ok();
        assert_eq!(got, scan_bond(&c, &constraints), "case {i}");
    }
}

#[test]
fn adaptive_plan_finds_a_decoupled_bond() {
    let mut j = vec![0.8; 11];
    j[2] = 1e-7;
    let spec = SpinChainSpec::new(12, j, vec![0.9; 12], vec![0.2; 12], 1.0, 4).unwrap();
    let c = build_spinchain_circuit(&spec);
    let profile = entropy_profile(&c, &default_checkpoints(c.len()), MpsConfig::exact()).unwrap();
    let plan = adaptive_plan(&c, &profile, &Constraints::unconstrained()).unwrap();
    assert_eq!(plan.cut_bond, 2);
    let scan: Vec<f64> = (0..11)
        .map(|k| plan_for_bond(&c, k).unwrap().total_overhead)
        .collect();
    let min = scan.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(plan.total_overhead, min);
    assert!(plan.total_overhead <= baseline_plan(&c).unwrap().total_overhead);
}

#[test]
fn adaptive_plan_ties_and_infeasible_constraints() {
    let spec = SpinChainSpec::new(12, vec![0.0; 11], vec![0.5; 12], vec![0.1; 12], 1.0, 2).unwrap();
    let c = build_spinchain_circuit(&spec);
    let profile = entropy_profile(&c, &default_checkpoints(c.len()), MpsConfig::exact()).unwrap();
    assert_eq!(
        adaptive_plan(&c, &profile, &Constraints::unconstrained())
            .unwrap()
            .cut_bond,
        5
    );
    assert!(matches!(
        adaptive_plan(&c, &profile, &Constraints::new(3, 100)),
        Err(KnitError::NoFeasibleBond)
    ));
}

#[test]
fn shots_estimator_is_unbiased() {
    let c = Circuit::new(4)
        .unwrap()
        .with(Gate::h(0))
        .unwrap()
        .with(Gate::ry(1, 0.4))
        .unwrap()
        .with(Gate::cx(1, 2))
        .unwrap()
        .with(Gate::rx(3, 0.9))
        .unwrap()
        .with(Gate::rzz(0, 1, 0.8))
        .unwrap();
    let plan = plan_for_bond(&c, 1).unwrap();
    let obs = PauliSum::from_labels(&[(1.0, "IZZI"), (0.5, "ZIIX")]).unwrap();
    let exact = knit_execute(&c, &plan, &obs, KnitMode::Exact)
        .unwrap()
        .value;
    let reps = 200;
    let values: Vec<f64> = (0..reps)
        .map(|seed| {
            knit_execute(&c, &plan, &obs, KnitMode::Shots { shots: 400, seed })
                .unwrap()
                .value
        })
        .collect();
    let mean = values.iter().sum::<f64>() / reps as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let sigma = (var / reps as f64).sqrt();
    assert!(sigma > 0.0);
    assert!(
        (mean - exact).abs() < 5.0 * sigma,
        "mean {mean} exact {exact} sigma {sigma}"
    );
    assert!(matches!(
        knit_execute(&c, &plan, &obs, KnitMode::Shots { shots: 0, seed: 1 }),
        Err(KnitError::NoShots)
    ));
}

#[test]
fn plan_mismatch_is_rejected() {
    let c = Circuit::new(3)
        .unwrap()
        .with(Gate::cx(0, 1))
        .unwrap()
        .with(Gate::cz(1, 2))
        .unwrap();
    let plan = plan_for_bond(&c, 0).unwrap();
    let other = Circuit::new(3)
        .unwrap()
        .with(Gate::cz(1, 2))
        .unwrap()
        .with(Gate::cx(0, 1))
        .unwrap();
    assert!(knit_execute(&other, &plan, &z_on(3, 0), KnitMode::Exact).is_err());
    assert!(knit_execute(&c, &plan, &z_on(4, 0), KnitMode::Exact).is_err());
    assert!(matches!(
        plan_for_bond(&c, 2),
        Err(KnitError::BadBond { .. })
    ));
}
