mod common;

use proptest::prelude::*;
use qstack::circuit::{Circuit, Gate};
use qstack::simmps::{entropy_profile, mps_simulate, MpsConfig};
use qstack::simsv::simulate;

#[test]
fn exact_mps_matches_statevector_on_nearest_neighbour_circuits() {
    let mut rng = common::rng(11);
    for n in 1..=12 {
        for _ in 0..6 {
            let c = common::random_circuit(&mut rng, n, 12 * n, true, false);
            let mps = mps_simulate(&c, MpsConfig::exact()).unwrap();
            let f = mps
                .to_statevector()
                .unwrap()
                .fidelity(&simulate(&c, None).unwrap());
            assert!(f >= 1.0 - 1e-10, "n={n} fidelity {f}");
            assert_eq!(mps.discarded_weight(), 0.0);
        }
    }
}

#[test]
fn routed_long_range_gates() {
    let mut rng = common::rng(12);
    for n in 3..=9 {
        let c = common::random_circuit(&mut rng, n, 10 * n, false, false);
        let mps = mps_simulate(&c, MpsConfig::exact()).unwrap();
        assert!(
            mps.to_statevector()
                .unwrap()
                .fidelity(&simulate(&c, None).unwrap())
                >= 1.0 - 1e-10
        );
    }
}

#[test]
fn bell_bond_carries_one_bit() {
    let c = Circuit::new(2)
        .unwrap()
        .with(Gate::h(0))
        .unwrap()
        .with(Gate::cx(0, 1))
        .unwrap();
    let mut mps = mps_simulate(&c, MpsConfig::exact()).unwrap();
    let e = mps.bond_entropies();
    assert!((e[0] - 1.0).abs() < 1e-10);
}

#[test]
fn entropies_match_reduced_density_matrices() {
    let mut rng = common::rng(13);
    for n in 2..=9 {
        let c = common::random_circuit(&mut rng, n, 8 * n, true, false);
        let mut mps = mps_simulate(&c, MpsConfig::exact()).unwrap();
        let sv = simulate(&c, None).unwrap();
        for (k, e) in mps.bond_entropies().iter().enumerate() {
            assert!(
                (e - common::bipartite_entropy(&sv, k)).abs() < 1e-9,
                "n={n} bond {k}"
            );
        }
    }
}

#[test]
fn profile_rows_follow_checkpoints() {
    let mut rng = common::rng(14);
    let c = common::random_circuit(&mut rng, 6, 40, true, false);
    let cps = [0, 10, 25, 40];
    let prof = entropy_profile(&c, &cps, MpsConfig::exact()).unwrap();
    assert!(prof.rows[0].iter().all(|&e| e.abs() < 1e-12));
    for (row, &cp) in prof.rows.iter().zip(&cps) {
        let mut prefix = Circuit::new(6).unwrap();
        prefix.extend(c.gates()[..cp].iter().cloned()).unwrap();
        let sv = simulate(&prefix, None).unwrap();
        for (k, e) in row.iter().enumerate() {
            assert!((e - common::bipartite_entropy(&sv, k)).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_stays_normalised_and_reports_loss(seed in any::<u64>(), chi in 1usize..5) {
        let mut rng = common::rng(seed);
        let c = common::random_circuit(&mut rng, 8, 60, true, false);
        let mps = mps_simulate(&c, MpsConfig::new(chi, 0.0)).unwrap();
        prop_assert!(mps.max_bond_dim() <= chi);
        let sv = mps.to_statevector().unwrap();
        prop_assert!((sv.norm_sqr() - 1.0).abs() < 1e-9);
        let f = sv.fidelity(&simulate(&c, None).unwrap());
        if mps.discarded_weight() == 0.0 {
            prop_assert!(f >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn bond_dimensions_bounded_by_cut_size(seed in any::<u64>(), n in 2usize..=10) {
        let mut rng = common::rng(seed);
        let c = common::random_circuit(&mut rng, n, 6 * n, true, false);
        let mps = mps_simulate(&c, MpsConfig::exact()).unwrap();
        for (k, &d) in mps.bond_dims()[1..n].iter().enumerate() {
            prop_assert!(d <= 1usize << (k + 1).min(n - k - 1));
        }
    }
}
