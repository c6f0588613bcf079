use std::collections::HashMap;
use std::f64::consts::PI;

use argmin::core::{CostFunction, Error as ArgminError, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Angle, Circuit, Gate, PauliString, PauliSum};
use crate::simsv::{sample_indices, StateVector, MAX_QUBITS};
use crate::C64;

use super::{Graph, MaxcutError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self, MaxcutError> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(MaxcutError::BadParams(format!(
                "{} gammas and {} betas",
                gammas.len(),
                betas.len()
            )));
        }
        Ok(QaoaParams { gammas, betas })
    }

    pub fn zeros(p: usize) -> Self {
        QaoaParams {
            gammas: vec![0.0; p],
            betas: vec![0.0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    /// `[γ_0 … γ_{p−1}, β_0 … β_{p−1}]`.
    pub fn flat(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn from_flat(x: &[f64]) -> Self {
        let p = x.len() / 2;
        QaoaParams {
            gammas: x[..p].to_vec(),
            betas: x[p..].to_vec(),
        }
    }

    /// Values for the symbols of [`qaoa_ansatz`].
    pub fn bindings(&self) -> HashMap<String, f64> {
        let mut m = HashMap::new();
        for (j, (g, b)) in self.gammas.iter().zip(&self.betas).enumerate() {
            m.insert(format!("gamma_{j}"), *g);
            m.insert(format!("beta_{j}"), *b);
        }
        m
    }
}

/// Side bits (`side[i]` ∈ {0, 1}) and their cut weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutAssignment {
    pub side: Vec<u8>,
    pub cut_value: f64,
}

impl CutAssignment {
    pub fn new(graph: &Graph, side: Vec<u8>) -> Self {
        let cut_value = graph.cut_value(&side);
        CutAssignment { side, cut_value }
    }

    pub fn from_index(graph: &Graph, x: usize) -> Self {
        CutAssignment::new(
            graph,
            (0..graph.n_nodes()).map(|i| (x >> i & 1) as u8).collect(),
        )
    }

    pub fn flipped(&self) -> Self {
        CutAssignment {
            side: self.side.iter().map(|s| 1 - s).collect(),
            cut_value: self.cut_value,
        }
    }
}

/// `Σ (w/2)(I − Z_u Z_v)`.
pub fn cost_hamiltonian(graph: &Graph) -> PauliSum {
    let n = graph.n_nodes();
    let mut h = PauliSum::zero(n);
    for e in graph.edges() {
        h.add_term(0.5 * e.w, PauliString::identity(n))
            .expect("width matches");
        let zz = PauliString::from_sparse(
            n,
            &[
                (e.u, crate::circuit::Pauli::Z),
                (e.v, crate::circuit::Pauli::Z),
            ],
        );
        h.add_term(-0.5 * e.w, zz).expect("width matches");
    }
    h
}

/// `Π_j e^{−iβ_j H_M} e^{−iγ_j H_C} |+⟩^n` with symbols `gamma_j`, `beta_j`.
/// The identity part of `H_C` is dropped, leaving `RZZ(−w γ_j)` per edge.
pub fn qaoa_ansatz(graph: &Graph, p: usize) -> Result<Circuit, MaxcutError> {
    if p < 1 {
        return Err(MaxcutError::BadParams("p must be at least 1".into()));
    }
    let n = graph.n_nodes();
    let mut c = Circuit::new(n)?;
    for q in 0..n {
        c.append(Gate::h(q))?;
    }
    for j in 0..p {
        for e in graph.edges() {
            c.append(Gate::rzz(
                e.u,
                e.v,
                Angle::scaled(format!("gamma_{j}"), -e.w),
            ))?;
        }
        for q in 0..n {
            c.append(Gate::rx(q, Angle::scaled(format!("beta_{j}"), 2.0)))?;
        }
    }
    Ok(c)
}

/// Cut value of every basis state.
pub fn cut_table(graph: &Graph) -> Result<Vec<f64>, MaxcutError> {
    let n = graph.n_nodes();
    if n > MAX_QUBITS {
        return Err(MaxcutError::TooLarge(n));
    }
    Ok((0..1usize << n).map(|x| graph.cut_of_index(x)).collect())
}

/// The QAOA state, evolved directly with the diagonal cost phase.
pub fn qaoa_state_with_table(n: usize, table: &[f64], params: &QaoaParams) -> StateVector {
    let amp = C64::new((table.len() as f64).sqrt().recip(), 0.0);
    let mut amps = vec![amp; table.len()];
    let mut state;
    for (g, b) in params.gammas.iter().zip(&params.betas) {
        for (a, c) in amps.iter_mut().zip(table) {
            *a *= C64::from_polar(1.0, -g * c);
        }
        state = StateVector::from_amplitudes(amps).expect("unitary evolution keeps the norm");
        let (s, co) = b.sin_cos();
        let rx = [
            C64::new(co, 0.0),
            C64::new(0.0, -s),
            C64::new(0.0, -s),
            C64::new(co, 0.0),
        ];
        for q in 0..n {
            state.apply_1q(q, rx);
        }
        amps = state.into_amplitudes();
    }
    StateVector::from_amplitudes(amps).expect("unitary evolution keeps the norm")
}

pub fn qaoa_state(graph: &Graph, params: &QaoaParams) -> Result<StateVector, MaxcutError> {
    Ok(qaoa_state_with_table(
        graph.n_nodes(),
        &cut_table(graph)?,
        params,
    ))
}

fn expectation_with_table(n: usize, table: &[f64], params: &QaoaParams) -> f64 {
    let s = qaoa_state_with_table(n, table, params);
    s.amplitudes()
        .iter()
        .zip(table)
        .map(|(a, c)| a.norm_sqr() * c)
        .sum()
}

/// `⟨H_C⟩` at the given parameters.
pub fn expected_cut(graph: &Graph, params: &QaoaParams) -> Result<f64, MaxcutError> {
    Ok(expectation_with_table(
        graph.n_nodes(),
        &cut_table(graph)?,
        params,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Nelder–Mead iterations per restart.
    pub max_iters: u64,
    /// Stop when the simplex cost standard deviation falls below this.
    pub sd_tol: f64,
    /// Points per axis of the p = 1 starting grid.
    pub grid: usize,
    pub initial_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 5,
            max_iters: 400,
            sd_tol: 1e-12,
            grid: 16,
            initial_step: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QaoaResult {
    pub params: QaoaParams,
    pub expected_cut: f64,
    /// Best value after each restart (non-decreasing).
    pub history: Vec<f64>,
}

struct NegCut<'a> {
    n: usize,
    table: &'a [f64],
}

impl CostFunction for NegCut<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, ArgminError> {
        Ok(-expectation_with_table(
            self.n,
            self.table,
            &QaoaParams::from_flat(x),
        ))
    }
}

fn nelder_mead(obj: NegCut<'_>, start: Vec<f64>, cfg: &OptimizerConfig) -> (Vec<f64>, f64) {
    let mut simplex = vec![start.clone()];
    for i in 0..start.len() {
        let mut v = start.clone();
        v[i] += cfg.initial_step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(cfg.sd_tol)
        .expect("tolerance is non-negative");
    let res = Executor::new(obj, solver)
        .configure(|s| s.max_iters(cfg.max_iters))
        .run()
        .expect("objective is finite");
    let state = res.state();
    let x = state.best_param.clone().unwrap_or(start);
    (x, -state.best_cost)
}

/// Multi-start Nelder–Mead maximisation of `⟨H_C⟩`.
///
/// The all-zero point is always evaluated and kept if nothing beats it. For
/// `p = 1` the first restart begins at the best point of a coarse
/// `(γ, β) ∈ [−π, π) × [−π/2, π/2)` grid; the other starts are drawn from
/// one seeded stream, so the first `k` restarts do not depend on how many
/// follow.
pub fn optimize(
    graph: &Graph,
    p: usize,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<QaoaResult, MaxcutError> {
    if p < 1 {
        return Err(MaxcutError::BadParams("p must be at least 1".into()));
    }
    let n = graph.n_nodes();
    let table = cut_table(graph)?;
    let eval = |x: &[f64]| expectation_with_table(n, &table, &QaoaParams::from_flat(x));
    let mut best_x = vec![0.0; 2 * p];
    let mut best = eval(&best_x);
    let mut history = Vec::with_capacity(cfg.restarts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..cfg.restarts {
        let random: Vec<f64> = (0..2 * p)
            .map(|i| {
                if i < p {
                    rng.random_range(-PI..PI)
                } else {
                    rng.random_range(-PI / 2.0..PI / 2.0)
                }
            })
            .collect();
        let start = if r == 0 && p == 1 && cfg.grid > 0 {
            grid_start(&eval, cfg.grid)
        } else {
            random
        };
        let (x, v) = nelder_mead(NegCut { n, table: &table }, start, cfg);
        if v > best {
            best = v;
            best_x = x;
        }
        history.push(best);
    }
    Ok(QaoaResult {
        params: QaoaParams::from_flat(&best_x),
        expected_cut: best,
        history,
    })
}

fn grid_start(eval: &impl Fn(&[f64]) -> f64, points: usize) -> Vec<f64> {
    let mut best = (f64::NEG_INFINITY, vec![0.0, 0.0]);
    for i in 0..points {
        for j in 0..points {
            let x = [
                -PI + 2.0 * PI * i as f64 / points as f64,
                -PI / 2.0 + PI * j as f64 / points as f64,
            ];
            let v = eval(&x);
            if v > best.0 {
                best = (v, x.to_vec());
            }
        }
    }
    best.1
}

/// Best-cut bitstring among `shots` samples of the QAOA state.
pub fn sample_assignment(
    graph: &Graph,
    params: &QaoaParams,
    shots: usize,
    seed: u64,
) -> Result<CutAssignment, MaxcutError> {
    if shots == 0 {
        return Err(MaxcutError::BadParams("shots must be positive".into()));
    }
    let state = qaoa_state(graph, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = sample_indices(&state.probabilities(), shots, &mut rng);
    let mut best: Option<(f64, usize)> = None;
    for &x in counts.keys() {
        let v = graph.cut_of_index(x);
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, x));
        }
    }
    let (_, x) = best.expect("at least one sample");
    Ok(CutAssignment::from_index(graph, x))
}
