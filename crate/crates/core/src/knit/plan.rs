use std::io::Write;

use crate::circuit::{Circuit, GateKind};
use crate::simmps::{entropy_profile, EntropyProfile, MpsConfig};

use super::{decompose_cut_gate, CutGateDecomposition, KnitError};

/// A single spatial cut between qubits `cut_bond` and `cut_bond + 1`.
#[derive(Clone, Debug)]
pub struct CutPlan {
    pub cut_bond: usize,
    /// Indices into the circuit's gate list.
    pub cut_gates: Vec<usize>,
    pub decompositions: Vec<CutGateDecomposition>,
    /// Π γ² over the cut gates.
    pub total_overhead: f64,
}

impl CutPlan {
    /// Fragment sizes `(|A|, |B|)` for an `n`-qubit circuit.
    pub fn fragment_sizes(&self, n_qubits: usize) -> (usize, usize) {
        (self.cut_bond + 1, n_qubits - self.cut_bond - 1)
    }

    pub fn gamma_product(&self) -> f64 {
        self.decompositions.iter().map(|d| d.gamma).product()
    }
}

/// Gates with operands on both sides of `bond`.
pub fn crossing_gates(circuit: &Circuit, bond: usize) -> Vec<usize> {
    circuit
        .gates()
        .iter()
        .enumerate()
        .filter(|(_, g)| {
            g.qubits().iter().any(|&q| q <= bond) && g.qubits().iter().any(|&q| q > bond)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Cuts every gate crossing `bond`.
pub fn plan_for_bond(circuit: &Circuit, bond: usize) -> Result<CutPlan, KnitError> {
    let n = circuit.n_qubits();
    if n < 2 || bond + 1 >= n {
        return Err(KnitError::BadBond { bond, n_qubits: n });
    }
    let cut_gates = crossing_gates(circuit, bond);
    let mut decompositions = Vec::with_capacity(cut_gates.len());
    for &i in &cut_gates {
        let g = &circuit.gates()[i];
        if g.kind() == GateKind::Unitary {
            return Err(KnitError::Unsupported(format!(
                "explicit unitary at gate {i}"
            )));
        }
        decompositions.push(decompose_cut_gate(g)?);
    }
    let total_overhead = decompositions.iter().map(|d| d.gamma * d.gamma).product();
    Ok(CutPlan {
        cut_bond: bond,
        cut_gates,
        decompositions,
        total_overhead,
    })
}

/// Load-balanced bond: `⌈n/2⌉ − 1`, so fragment A is never smaller than B.
pub fn baseline_bond(n_qubits: usize) -> usize {
    n_qubits.div_ceil(2).saturating_sub(1)
}

pub fn baseline_plan(circuit: &Circuit) -> Result<CutPlan, KnitError> {
    plan_for_bond(circuit, baseline_bond(circuit.n_qubits()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Aggregate {
    /// Worst case over checkpoints.
    #[default]
    Max,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constraints {
    /// Largest allowed fragment (qubits).
    pub max_fragment: usize,
    /// Largest allowed `||A| − |B||`.
    pub imbalance_tol: usize,
    pub aggregate: Aggregate,
}

impl Constraints {
    pub fn new(max_fragment: usize, imbalance_tol: usize) -> Self {
        Constraints {
            max_fragment,
            imbalance_tol,
            aggregate: Aggregate::Max,
        }
    }

    /// Any bond is allowed.
    pub fn unconstrained() -> Self {
        Constraints::new(usize::MAX, usize::MAX)
    }

    pub fn allows(&self, n_qubits: usize, bond: usize) -> bool {
        let (a, b) = (bond + 1, n_qubits - bond - 1);
        a <= self.max_fragment && b <= self.max_fragment && a.abs_diff(b) <= self.imbalance_tol
    }
}

/// Scores closer than this are considered tied.
const SCORE_TIE: f64 = 1e-9;

/// Picks the feasible bond with the lowest aggregated entropy. Ties go to
/// the more balanced bond, then the lower index.
pub fn adaptive_plan(
    circuit: &Circuit,
    profile: &EntropyProfile,
    constraints: &Constraints,
) -> Result<CutPlan, KnitError> {
    let n = circuit.n_qubits();
    if n < 2 || profile.n_bonds() != n - 1 {
        return Err(KnitError::ProfileMismatch {
            bonds: profile.n_bonds(),
            n_qubits: n,
        });
    }
    let scores = match constraints.aggregate {
        Aggregate::Max => profile.max_over_time(),
        Aggregate::Mean => profile.mean_over_time(),
    };
    let imbalance = |k: usize| (k + 1).abs_diff(n - k - 1);
    let mut best: Option<usize> = None;
    for k in (0..n - 1).filter(|&k| constraints.allows(n, k)) {
        best = match best {
            None => Some(k),
            Some(b) => {
                let better = scores[k] < scores[b] - SCORE_TIE
                    || ((scores[k] - scores[b]).abs() <= SCORE_TIE && imbalance(k) < imbalance(b));
                Some(if better { k } else { b })
            }
        };
    }
    let bond = best.ok_or(KnitError::NoFeasibleBond)?;
    plan_for_bond(circuit, bond)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverheadReport {
    pub adaptive_bond: usize,
    pub baseline_bond: usize,
    pub adaptive_overhead: f64,
    pub baseline_overhead: f64,
    /// `baseline_overhead / adaptive_overhead`.
    pub ratio: f64,
}

/// Checkpoints used for the entropy probe: every gate for short circuits,
/// otherwise at most 256 evenly spaced counts ending at the full circuit.
pub fn default_checkpoints(n_gates: usize) -> Vec<usize> {
    const MAX_POINTS: usize = 256;
    if n_gates <= MAX_POINTS {
        return (0..=n_gates).collect();
    }
    let mut cps: Vec<usize> = (0..=MAX_POINTS).map(|i| i * n_gates / MAX_POINTS).collect();
    cps.dedup();
    cps
}

/// Probes the circuit with an exact MPS, then compares the adaptive and
/// baseline plans.
pub fn overhead_reduction(
    circuit: &Circuit,
    constraints: &Constraints,
) -> Result<OverheadReport, KnitError> {
    let profile = entropy_profile(
        circuit,
        &default_checkpoints(circuit.len()),
        MpsConfig::exact(),
    )?;
    overhead_reduction_with_profile(circuit, &profile, constraints)
}

pub fn overhead_reduction_with_profile(
    circuit: &Circuit,
    profile: &EntropyProfile,
    constraints: &Constraints,
) -> Result<OverheadReport, KnitError> {
    let adaptive = adaptive_plan(circuit, profile, constraints)?;
    let baseline = baseline_plan(circuit)?;
    Ok(OverheadReport {
        adaptive_bond: adaptive.cut_bond,
        baseline_bond: baseline.cut_bond,
        adaptive_overhead: adaptive.total_overhead,
        baseline_overhead: baseline.total_overhead,
        ratio: baseline.total_overhead / adaptive.total_overhead,
    })
}

/// One line of an ensemble report.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EnsembleRow {
    pub seed: u64,
    pub cut_bond: usize,
    pub adaptive_overhead: f64,
    pub baseline_overhead: f64,
    pub ratio: f64,
}

impl EnsembleRow {
    pub fn new(seed: u64, report: &OverheadReport) -> Self {
        EnsembleRow {
            seed,
            cut_bond: report.adaptive_bond,
            adaptive_overhead: report.adaptive_overhead,
            baseline_overhead: report.baseline_overhead,
            ratio: report.ratio,
        }
    }
}

pub fn write_ensemble_csv<W: Write>(rows: &[EnsembleRow], out: W) -> Result<(), KnitError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| KnitError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| KnitError::Io(e.to_string()))
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}
