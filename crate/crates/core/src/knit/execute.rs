use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Circuit, Gate, GateKind, PauliString, PauliSum};
use crate::simsv::{StateVector, MAX_QUBITS};

use super::{crossing_gates, CutPlan, KnitError, LocalOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KnitMode {
    Exact,
    Shots { shots: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnitResult {
    pub value: f64,
    /// Contribution of each term combination, in mixed-radix order with the
    /// last cut gate varying fastest. `value` is their sum.
    pub per_term_values: Vec<f64>,
    /// Π γ² of the plan.
    pub overhead: f64,
    /// Standard error of `value` (shots mode only).
    pub std_error: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

enum Step {
    Gate(Gate),
    Cut {
        index: usize,
        side: Side,
        qubit: usize,
    },
}

struct Fragment {
    offset: usize,
    n_qubits: usize,
    steps: Vec<Step>,
}

/// Unnormalised, sign-weighted branches of a fragment after its signed
/// measurements.
struct Branches(Vec<(f64, StateVector)>);

impl Branches {
    fn expectation(&self, p: &PauliString) -> f64 {
        self.0
            .iter()
            .map(|(sign, s)| sign * s.pauli_expectation(p).expect("width checked"))
            .sum()
    }
}

impl Fragment {
    fn build(circuit: &Circuit, plan: &CutPlan, offset: usize, n_qubits: usize) -> Fragment {
        let inside = |q: usize| q >= offset && q < offset + n_qubits;
        let mut steps = Vec::new();
        let mut cut_iter = plan.cut_gates.iter().enumerate().peekable();
        for (gi, gate) in circuit.gates().iter().enumerate() {
            if let Some(&(index, _)) = cut_iter.peek().filter(|(_, &g)| g == gi) {
                cut_iter.next();
                let qs = gate.qubits();
                if inside(qs[0]) {
                    steps.push(Step::Cut {
                        index,
                        side: Side::Left,
                        qubit: qs[0] - offset,
                    });
                } else {
                    steps.push(Step::Cut {
                        index,
                        side: Side::Right,
                        qubit: qs[1] - offset,
                    });
                }
                continue;
            }
            if gate.kind() == GateKind::Measure || !gate.qubits().iter().all(|&q| inside(q)) {
                continue;
            }
            steps.push(Step::Gate(gate.remapped(|q| q - offset)));
        }
        Fragment {
            offset,
            n_qubits,
            steps,
        }
    }

    fn run(&self, plan: &CutPlan, combo: &[usize]) -> Result<Branches, KnitError> {
        let mut branches = vec![(1.0, StateVector::zero(self.n_qubits)?)];
        for step in &self.steps {
            match step {
                Step::Gate(g) => {
                    for (_, s) in &mut branches {
                        s.apply(g)?;
                    }
                }
                Step::Cut { index, side, qubit } => {
                    let term = &plan.decompositions[*index].terms[combo[*index]];
                    let ops = match side {
                        Side::Left => &term.left_ops,
                        Side::Right => &term.right_ops,
                    };
                    for op in ops {
                        match op {
                            LocalOp::Gate(g) => {
                                let g = g.remapped(|_| *qubit);
                                for (_, s) in &mut branches {
                                    s.apply(&g)?;
                                }
                            }
                            LocalOp::MeasureSign => {
                                let mut next = Vec::with_capacity(branches.len() * 2);
                                for (sign, s) in branches {
                                    for outcome in 0..2 {
                                        let mut b = s.clone();
                                        b.project(*qubit, outcome);
                                        if b.norm_sqr() > 0.0 {
                                            next.push((if outcome == 0 { sign } else { -sign }, b));
                                        }
                                    }
                                }
                                branches = next;
                            }
                        }
                    }
                }
            }
        }
        Ok(Branches(branches))
    }
}

/// Observable terms split into fragment-local strings.
fn split_observable(
    observable: &PauliSum,
    n_a: usize,
    n_b: usize,
) -> Vec<(f64, PauliString, PauliString)> {
    observable
        .terms()
        .iter()
        .map(|(c, p)| (*c, p.slice(0, n_a), p.slice(n_a, n_b)))
        .collect()
}

fn validate(
    circuit: &Circuit,
    plan: &CutPlan,
    observable: &PauliSum,
) -> Result<(usize, usize), KnitError> {
    let n = circuit.n_qubits();
    if n < 2 || plan.cut_bond + 1 >= n {
        return Err(KnitError::BadBond {
            bond: plan.cut_bond,
            n_qubits: n,
        });
    }
    if !circuit.is_bound() {
        return Err(KnitError::Unbound);
    }
    if crossing_gates(circuit, plan.cut_bond) != plan.cut_gates
        || plan.decompositions.len() != plan.cut_gates.len()
    {
        return Err(KnitError::PlanMismatch);
    }
    for (&gi, d) in plan.cut_gates.iter().zip(&plan.decompositions) {
        let g = &circuit.gates()[gi];
        if g.kind() != d.original.kind()
            || g.qubits() != d.original.qubits()
            || g.angle() != d.original.angle()
        {
            return Err(KnitError::PlanMismatch);
        }
    }
    if observable.n_qubits() != n {
        return Err(KnitError::ObservableWidth {
            circuit: n,
            observable: observable.n_qubits(),
        });
    }
    let (a, b) = plan.fragment_sizes(n);
    if a.max(b) > MAX_QUBITS {
        return Err(KnitError::FragmentTooLarge(a.max(b)));
    }
    Ok((a, b))
}

fn combo_of(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut combo = vec![0; radices.len()];
    for (slot, &r) in combo.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    combo
}

/// Reconstructs `⟨observable⟩` of `circuit` from independently simulated
/// fragments.
pub fn knit_execute(
    circuit: &Circuit,
    plan: &CutPlan,
    observable: &PauliSum,
    mode: KnitMode,
) -> Result<KnitResult, KnitError> {
    let (n_a, n_b) = validate(circuit, plan, observable)?;
    let frag_a = Fragment::build(circuit, plan, 0, n_a);
    let frag_b = Fragment::build(circuit, plan, n_a, n_b);
    debug_assert_eq!(frag_b.offset, n_a);
    let obs = split_observable(observable, n_a, n_b);
    let radices: Vec<usize> = plan.decompositions.iter().map(|d| d.terms.len()).collect();
    let n_combos: usize = radices.iter().product();
    match mode {
        KnitMode::Exact => {
            let per_term_values = (0..n_combos)
                .into_par_iter()
                .map(|ci| {
                    let combo = combo_of(ci, &radices);
                    let coef: f64 = combo
                        .iter()
                        .zip(&plan.decompositions)
                        .map(|(&t, d)| d.terms[t].coefficient)
                        .product();
                    let ba = frag_a.run(plan, &combo)?;
                    let bb = frag_b.run(plan, &combo)?;
                    let v: f64 = obs
                        .iter()
                        .map(|(c, pa, pb)| c * ba.expectation(pa) * bb.expectation(pb))
                        .sum();
                    Ok(coef * v)
                })
                .collect::<Result<Vec<f64>, KnitError>>()?;
            let value = per_term_values.iter().sum();
            Ok(KnitResult {
                value,
                per_term_values,
                overhead: plan.total_overhead,
                std_error: None,
            })
        }
        KnitMode::Shots { shots, seed } => {
            shots_estimate(plan, &frag_a, &frag_b, &obs, &radices, shots, seed)
        }
    }
}

/// Normalised branch distribution of one fragment for one combination.
struct Sampled {
    probs: Vec<f64>,
    signs: Vec<f64>,
    /// `exps[branch][term]`: normalised expectation of the term's local string.
    exps: Vec<Vec<f64>>,
}

impl Sampled {
    fn new(b: Branches, strings: &[&PauliString]) -> Sampled {
        let mut probs = Vec::new();
        let mut signs = Vec::new();
        let mut exps = Vec::new();
        for (sign, s) in b.0 {
            let w = s.norm_sqr();
            probs.push(w);
            signs.push(sign);
            exps.push(
                strings
                    .iter()
                    .map(|p| s.pauli_expectation(p).expect("width checked") / w)
                    .collect(),
            );
        }
        Sampled { probs, signs, exps }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let total: f64 = self.probs.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

fn eigen_draw<R: Rng>(expectation: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < 0.5 * (1.0 + expectation) {
        1.0
    } else {
        -1.0
    }
}

/// Monte Carlo estimator: each shot draws one term per cut gate with
/// probability `|c|/γ`, a measurement branch per fragment, and a ±1
/// eigenvalue per observable term, and contributes
/// `γ_total · sign · Σ_t c_t e_A e_B`.
fn shots_estimate(
    plan: &CutPlan,
    frag_a: &Fragment,
    frag_b: &Fragment,
    obs: &[(f64, PauliString, PauliString)],
    radices: &[usize],
    shots: usize,
    seed: u64,
) -> Result<KnitResult, KnitError> {
    if shots == 0 {
        return Err(KnitError::NoShots);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma_total = plan.gamma_product();
    let mut combos = Vec::with_capacity(shots);
    for _ in 0..shots {
        let mut idx = 0usize;
        let mut sign = 1.0;
        for (d, &r) in plan.decompositions.iter().zip(radices) {
            let u = rng.random::<f64>() * d.gamma;
            let mut acc = 0.0;
            let mut pick = d.terms.len() - 1;
            for (t, term) in d.terms.iter().enumerate() {
                acc += term.coefficient.abs();
                if u < acc {
                    pick = t;
                    break;
                }
            }
            sign *= d.terms[pick].coefficient.signum();
            idx = idx * r + pick;
        }
        combos.push((idx, sign));
    }
    let mut distinct: Vec<usize> = combos.iter().map(|c| c.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let strings_a: Vec<&PauliString> = obs.iter().map(|t| &t.1).collect();
    let strings_b: Vec<&PauliString> = obs.iter().map(|t| &t.2).collect();
    let tables = distinct
        .par_iter()
        .map(|&ci| {
            let combo = combo_of(ci, radices);
            Ok((
                Sampled::new(frag_a.run(plan, &combo)?, &strings_a),
                Sampled::new(frag_b.run(plan, &combo)?, &strings_b),
            ))
        })
        .collect::<Result<Vec<_>, KnitError>>()?;

    let mut per_term_values = vec![0.0; radices.iter().product()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for (ci, sign) in combos {
        let (ta, tb) = &tables[distinct.binary_search(&ci).expect("combo tabulated")];
        let (ia, ib) = (ta.draw(&mut rng), tb.draw(&mut rng));
        let mut v = 0.0;
        for (t, (c, _, _)) in obs.iter().enumerate() {
            let ea = eigen_draw(ta.exps[ia][t], &mut rng);
            let eb = eigen_draw(tb.exps[ib][t], &mut rng);
            v += c * ea * eb;
        }
        let x = gamma_total * sign * ta.signs[ia] * tb.signs[ib] * v;
        per_term_values[ci] += x / shots as f64;
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / shots as f64;
    let var = if shots > 1 {
        (sum_sq - shots as f64 * mean * mean).max(0.0) / (shots - 1) as f64
    } else {
        0.0
    };
    Ok(KnitResult {
        value: mean,
        per_term_values,
        overhead: plan.total_overhead,
        std_error: Some((var / shots as f64).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knit::plan_for_bond;
    use crate::simsv::{expectation, simulate};

    #[test]
    fn two_qubit_rzz() {
        let c = Circuit::new(2)
            .unwrap()
            .with(Gate::h(0))
            .unwrap()
            .with(Gate::rzz(0, 1, 0.7))
            .unwrap();
        let plan = plan_for_bond(&c, 0).unwrap();
        for obs in ["ZZ", "XZ", "ZX", "YI", "IX"] {
            let o = PauliSum::from_labels(&[(1.0, obs)]).unwrap();
            let r = knit_execute(&c, &plan, &o, KnitMode::Exact).unwrap();
            let want = expectation(&simulate(&c, None).unwrap(), &o).unwrap();
            assert!(
                (r.value - want).abs() < 1e-12,
                "{obs}: {} vs {want}",
                r.value
            );
        }
    }

    #[test]
    fn cx_cut_both_orientations() {
        let c = Circuit::new(3)
            .unwrap()
            .with(Gate::h(0))
            .unwrap()
            .with(Gate::ry(2, 0.4))
            .unwrap()
            .with(Gate::cx(0, 1))
            .unwrap()
            .with(Gate::cx(2, 1))
            .unwrap()
            .with(Gate::rx(1, 0.3))
            .unwrap()
            .with(Gate::cz(1, 2))
            .unwrap();
        let o = PauliSum::from_labels(&[(0.5, "ZZX"), (-1.0, "XYI"), (2.0, "III")]).unwrap();
        let want = expectation(&simulate(&c, None).unwrap(), &o).unwrap();
        for bond in 0..2 {
            let plan = plan_for_bond(&c, bond).unwrap();
            let r = knit_execute(&c, &plan, &o, KnitMode::Exact).unwrap();
            assert!((r.value - want).abs() < 1e-10);
            assert_eq!(
                r.per_term_values.len(),
                plan.decompositions
                    .iter()
                    .map(|d| d.terms.len())
                    .product::<usize>()
            );
        }
    }

    #[test]
    fn shots_are_reproducible_and_close() {
        let c = Circuit::new(2)
            .unwrap()
            .with(Gate::h(0))
            .unwrap()
            .with(Gate::cx(0, 1))
            .unwrap();
        let plan = plan_for_bond(&c, 0).unwrap();
        let o = PauliSum::from_labels(&[(1.0, "ZZ")]).unwrap();
        let a = knit_execute(
            &c,
            &plan,
            &o,
            KnitMode::Shots {
                shots: 20000,
                seed: 9,
            },
        )
        .unwrap();
        let b = knit_execute(
            &c,
            &plan,
            &o,
            KnitMode::Shots {
                shots: 20000,
                seed: 9,
            },
        )
        .unwrap();
        assert_eq!(a, b);
        let se = a.std_error.unwrap();
        assert!((a.value - 1.0).abs() < 5.0 * se, "{} ± {se}", a.value);
    }

    #[test]
    fn mismatched_plan_rejected() {
        let c = Circuit::new(3)
            .unwrap()
            .with(Gate::rzz(0, 1, 0.2))
            .unwrap()
            .with(Gate::rzz(1, 2, 0.2))
            .unwrap();
        let plan = plan_for_bond(&c, 0).unwrap();
        let other = Circuit::new(3).unwrap().with(Gate::rzz(1, 2, 0.2)).unwrap();
        let o = PauliSum::from_labels(&[(1.0, "ZZZ")]).unwrap();
        assert_eq!(
            knit_execute(&other, &plan, &o, KnitMode::Exact).unwrap_err(),
            KnitError::PlanMismatch
        );
        let o2 = PauliSum::from_labels(&[(1.0, "ZZ")]).unwrap();
        assert!(matches!(
            knit_execute(&c, &plan, &o2, KnitMode::Exact),
            Err(KnitError::ObservableWidth { .. })
        ));
    }
}
