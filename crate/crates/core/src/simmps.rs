//! Matrix-product-state simulator and bond-entropy probe.
//!
//! Site `i` holds qubit `i` as a rank-3 tensor `(left bond, physical, right
//! bond)` stored row-major. The state is kept in mixed canonical form with a
//! tracked orthogonality center; two-qubit gates on adjacent sites are applied
//! by contracting the pair, applying the gate, and splitting with a truncated
//! SVD. Gates on non-adjacent qubits are routed with SWAPs.
//!
//! Entropies are reported in bits.

use std::io::Write;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::linalg::{c, Matrix};
use crate::simsv::StateVector;
use crate::C64;

/// Singular values below this fraction of the largest are treated as exact
/// zeros and always dropped.
const ZERO_CUTOFF: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("chi_max must be at least 1")]
    BadChi,
    #[error("truncation tolerance must be finite and non-negative")]
    BadTolerance,
    #[error("gate {index} acts on non-adjacent qubits {a} and {b} and SWAP routing is disabled")]
    NonAdjacent { index: usize, a: usize, b: usize },
    #[error("gate {0} acts on more than two qubits")]
    TooWide(usize),
    #[error("gate {0} has an unbound parameter")]
    Unbound(usize),
    #[error("checkpoints must be strictly increasing and at most the gate count ({0})")]
    BadCheckpoints(usize),
    #[error("{0} qubits is too many to expand into a statevector")]
    TooManyQubits(usize),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpsConfig {
    pub chi_max: usize,
    pub trunc_tol: f64,
    /// Insert SWAPs for gates on non-adjacent qubits.
    pub route_swaps: bool,
}

impl MpsConfig {
    /// No truncation beyond exact zeros.
    pub fn exact() -> Self {
        MpsConfig {
            chi_max: usize::MAX,
            trunc_tol: 0.0,
            route_swaps: true,
        }
    }

    pub fn new(chi_max: usize, trunc_tol: f64) -> Self {
        MpsConfig {
            chi_max,
            trunc_tol,
            route_swaps: true,
        }
    }

    fn validate(&self) -> Result<(), MpsError> {
        if self.chi_max < 1 {
            return Err(MpsError::BadChi);
        }
        if !(self.trunc_tol >= 0.0 && self.trunc_tol.is_finite()) {
            return Err(MpsError::BadTolerance);
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Site {
    left: usize,
    right: usize,
    data: Vec<C64>,
}

impl Site {
    fn product(amp0: C64, amp1: C64) -> Self {
        Site {
            left: 1,
            right: 1,
            data: vec![amp0, amp1],
        }
    }

    /// `(left·2) × right` view.
    fn left_matrix(&self) -> Matrix {
        DMatrix::from_row_slice(self.left * 2, self.right, &self.data)
    }

    /// `left × (2·right)` view.
    fn right_matrix(&self) -> Matrix {
        DMatrix::from_row_slice(self.left, 2 * self.right, &self.data)
    }

    fn from_matrix(m: &Matrix, left: usize, right: usize) -> Self {
        debug_assert_eq!(m.nrows() * m.ncols(), left * 2 * right);
        let mut data = Vec::with_capacity(left * 2 * right);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Site { left, right, data }
    }
}

#[derive(Clone, Debug)]
pub struct MpsState {
    sites: Vec<Site>,
    spectra: Vec<Vec<f64>>,
    chi_max: usize,
    trunc_tol: f64,
    center: usize,
    spectra_fresh: bool,
    discarded_weight: f64,
    swaps_inserted: usize,
}

impl MpsState {
    /// `|0…0⟩`.
    pub fn new(n_qubits: usize, config: MpsConfig) -> Result<Self, MpsError> {
        config.validate()?;
        Ok(MpsState {
            sites: (0..n_qubits)
                .map(|_| Site::product(c(1.0, 0.0), c(0.0, 0.0)))
                .collect(),
            spectra: vec![vec![1.0]; n_qubits.saturating_sub(1)],
            chi_max: config.chi_max,
            trunc_tol: config.trunc_tol,
            center: 0,
            spectra_fresh: true,
            discarded_weight: 0.0,
            swaps_inserted: 0,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    /// Dimension of every bond including the two trivial boundary bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims = vec![1];
        dims.extend(self.sites.iter().map(|s| s.right));
        dims
    }

    pub fn max_bond_dim(&self) -> usize {
        self.sites.iter().map(|s| s.right).max().unwrap_or(1)
    }

    /// Orthogonality center (site index).
    pub fn center(&self) -> usize {
        self.center
    }

    /// Cumulative discarded weight (Σ discarded s² relative to the pre-split norm).
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub fn swaps_inserted(&self) -> usize {
        self.swaps_inserted
    }

    /// Descending Schmidt values of each interior bond, normalised to Σ s² = 1.
    ///
    /// Call [`MpsState::canonicalize`] first if the state has been truncated.
    pub fn bond_spectra(&self) -> &[Vec<f64>] {
        &self.spectra
    }

    pub fn is_canonical(&self) -> bool {
        self.spectra_fresh
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), MpsError> {
        self.apply_gate_indexed(gate, 0, true)
    }

    fn apply_gate_indexed(
        &mut self,
        gate: &Gate,
        index: usize,
        route: bool,
    ) -> Result<(), MpsError> {
        if gate.kind() == GateKind::Measure {
            return Ok(());
        }
        let m = gate.matrix().ok_or(MpsError::Unbound(index))?;
        let qs = gate.qubits();
        match qs.len() {
            1 => {
                self.apply_one(qs[0], &m);
                Ok(())
            }
            2 => {
                let (a, b) = (qs[0], qs[1]);
                let (lo, hi) = (a.min(b), a.max(b));
                // local bit 0 must sit on the lower site
                let m = if a < b { m } else { swap_bits(&m) };
                if hi == lo + 1 {
                    self.apply_two(lo, &m);
                    return Ok(());
                }
                if !route {
                    return Err(MpsError::NonAdjacent { index, a, b });
                }
                let swap = swap_matrix();
                for k in (lo + 1..hi).rev() {
                    self.apply_two(k, &swap);
                }
                self.apply_two(lo, &m);
                for k in lo + 1..hi {
                    self.apply_two(k, &swap);
                }
                self.swaps_inserted += 2 * (hi - lo - 1);
                Ok(())
            }
            _ => Err(MpsError::TooWide(index)),
        }
    }

    fn apply_one(&mut self, q: usize, m: &Matrix) {
        let site = &mut self.sites[q];
        let r = site.right;
        for a in 0..site.left {
            for b in 0..r {
                let x0 = site.data[(a * 2) * r + b];
                let x1 = site.data[(a * 2 + 1) * r + b];
                site.data[(a * 2) * r + b] = m[(0, 0)] * x0 + m[(0, 1)] * x1;
                site.data[(a * 2 + 1) * r + b] = m[(1, 0)] * x0 + m[(1, 1)] * x1;
            }
        }
    }

    fn move_center_right(&mut self) {
        let i = self.center;
        let site = &self.sites[i];
        let l = site.left;
        let qr = site.left_matrix().qr();
        let q = qr.q();
        let rm = qr.r();
        let k = q.ncols();
        self.sites[i] = Site::from_matrix(&q, l, k);
        let next = &self.sites[i + 1];
        let merged = rm * next.right_matrix();
        let nr = next.right;
        self.sites[i + 1] = Site::from_matrix(&merged, k, nr);
        self.center = i + 1;
    }

    fn move_center_left(&mut self) {
        let i = self.center;
        let site = &self.sites[i];
        let (l, r) = (site.left, site.right);
        let qr = site.right_matrix().adjoint().qr();
        let q = qr.q();
        let rm = qr.r();
        let k = q.ncols();
        self.sites[i] = Site::from_matrix(&q.adjoint(), k, r);
        debug_assert_eq!(rm.ncols(), l);
        let prev = &self.sites[i - 1];
        let pl = prev.left;
        let merged = prev.left_matrix() * rm.adjoint();
        self.sites[i - 1] = Site::from_matrix(&merged, pl, k);
        self.center = i - 1;
    }

    fn move_center_to(&mut self, target: usize) {
        while self.center < target {
            self.move_center_right();
        }
        while self.center > target {
            self.move_center_left();
        }
    }

    /// Applies a 4×4 gate to sites `(i, i+1)`; local bit 0 is site `i`.
    fn apply_two(&mut self, i: usize, g: &Matrix) {
        self.move_center_to(i);
        let (sa, sb) = (&self.sites[i], &self.sites[i + 1]);
        let (l, mid, r) = (sa.left, sa.right, sb.right);
        let mut theta = vec![c(0.0, 0.0); l * 4 * r];
        // theta[a, s1, s2, b], row-major
        for a in 0..l {
            for s1 in 0..2 {
                for k in 0..mid {
                    let x = sa.data[(a * 2 + s1) * mid + k];
                    if x == c(0.0, 0.0) {
                        continue;
                    }
                    for s2 in 0..2 {
                        for b in 0..r {
                            theta[((a * 2 + s1) * 2 + s2) * r + b] +=
                                x * sb.data[(k * 2 + s2) * r + b];
                        }
                    }
                }
            }
        }
        // rows (a, t1), cols (t2, b)
        let mut rotated = Matrix::zeros(l * 2, 2 * r);
        for a in 0..l {
            for b in 0..r {
                let local: [C64; 4] = std::array::from_fn(|s| {
                    let (s1, s2) = (s & 1, s >> 1);
                    theta[((a * 2 + s1) * 2 + s2) * r + b]
                });
                for t in 0..4 {
                    let mut acc = c(0.0, 0.0);
                    for (s, v) in local.iter().enumerate() {
                        acc += g[(t, s)] * v;
                    }
                    let (t1, t2) = (t & 1, t >> 1);
                    rotated[(a * 2 + t1, t2 * r + b)] = acc;
                }
            }
        }
        let (u, s, vt, discarded) = truncated_svd(rotated, self.chi_max, self.trunc_tol);
        let k = s.len();
        if discarded > 0.0 {
            self.discarded_weight += discarded;
            self.spectra_fresh = false;
        }
        let sv = Matrix::from_fn(k, 2 * r, |row, col| vt[(row, col)] * s[row]);
        self.sites[i] = Site::from_matrix(&u, l, k);
        self.sites[i + 1] = Site::from_matrix(&sv, k, r);
        self.spectra[i] = s;
        self.center = i + 1;
    }

    /// Recomputes every bond spectrum: a left-to-right QR sweep followed by a
    /// right-to-left SVD sweep. Leaves the center on site 0.
    pub fn canonicalize(&mut self) {
        let n = self.sites.len();
        if n == 0 {
            return;
        }
        self.move_center_to(n - 1);
        for i in (1..n).rev() {
            let site = &self.sites[i];
            let r = site.right;
            let (u, s, vt, _) = truncated_svd(site.right_matrix(), usize::MAX, 0.0);
            let k = s.len();
            self.sites[i] = Site::from_matrix(&vt, k, r);
            let prev = &self.sites[i - 1];
            let pl = prev.left;
            let us = Matrix::from_fn(u.nrows(), k, |row, col| u[(row, col)] * s[col]);
            let merged = prev.left_matrix() * us;
            self.sites[i - 1] = Site::from_matrix(&merged, pl, k);
            self.spectra[i - 1] = s;
            self.center = i - 1;
        }
        self.spectra_fresh = true;
    }

    /// Von Neumann entropy (bits) of each interior bond.
    pub fn bond_entropies(&mut self) -> Vec<f64> {
        if !self.spectra_fresh {
            self.canonicalize();
        }
        self.spectra.iter().map(|s| spectrum_entropy(s)).collect()
    }

    /// Contracts the chain into dense amplitudes (qubit 0 least significant).
    pub fn to_statevector(&self) -> Result<StateVector, MpsError> {
        let n = self.sites.len();
        if n > crate::simsv::MAX_QUBITS {
            return Err(MpsError::TooManyQubits(n));
        }
        // psi[x * r + b]
        let mut psi = vec![c(1.0, 0.0)];
        let mut width = 1usize;
        for site in &self.sites {
            let (l, r) = (site.left, site.right);
            let mut next = vec![c(0.0, 0.0); width * 2 * r];
            for x in 0..width {
                for a in 0..l {
                    let p = psi[x * l + a];
                    if p == c(0.0, 0.0) {
                        continue;
                    }
                    for s in 0..2 {
                        for b in 0..r {
                            next[(x + s * width) * r + b] += p * site.data[(a * 2 + s) * r + b];
                        }
                    }
                }
            }
            psi = next;
            width *= 2;
        }
        Ok(StateVector::from_raw(psi))
    }
}

/// −Σ p log₂ p with p = s² / Σ s².
pub fn spectrum_entropy(s: &[f64]) -> f64 {
    let total: f64 = s.iter().map(|x| x * x).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = s
        .iter()
        .map(|x| x * x / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

fn swap_matrix() -> Matrix {
    let mut m = Matrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 2)] = c(1.0, 0.0);
    m[(2, 1)] = c(1.0, 0.0);
    m[(3, 3)] = c(1.0, 0.0);
    m
}

/// Relabels a 4×4 two-qubit matrix with its two local bits exchanged.
fn swap_bits(m: &Matrix) -> Matrix {
    let p = [0usize, 2, 1, 3];
    Matrix::from_fn(4, 4, |i, j| m[(p[i], p[j])])
}

/// SVD with descending singular values, truncated to at most `chi_max`
/// values and by discarded weight ≤ `tol` (relative). Kept values are
/// renormalised to unit 2-norm. Returns `(U, s, V†, discarded)`.
fn thin_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let f = faer::Mat::<C64>::from_fn(m.nrows(), m.ncols(), |r, col| m[(r, col)]);
    let svd = f.thin_svd().expect("SVD converges");
    let (u, v) = (svd.U(), svd.V());
    let s = (0..u.ncols()).map(|k| svd.S()[k].re).collect();
    let u = Matrix::from_fn(u.nrows(), u.ncols(), |r, k| u[(r, k)]);
    let vt = Matrix::from_fn(v.ncols(), v.nrows(), |k, col| v[(col, k)].conj());
    (u, s, vt)
}

fn truncated_svd(m: Matrix, chi_max: usize, tol: f64) -> (Matrix, Vec<f64>, Matrix, f64) {
    let (u, sv, vt) = thin_svd(&m);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let s: Vec<f64> = order.iter().map(|&i| sv[i]).collect();
    let total: f64 = s.iter().map(|x| x * x).sum();
    let smax = s.first().copied().unwrap_or(0.0);

    let mut keep = s
        .iter()
        .take_while(|&&x| x > ZERO_CUTOFF * smax)
        .count()
        .max(1);
    keep = keep.min(chi_max.max(1));
    let mut discarded: f64 = s[keep..].iter().map(|x| x * x).sum();
    while keep > 1 && (discarded + s[keep - 1] * s[keep - 1]) <= tol * total {
        keep -= 1;
        discarded += s[keep] * s[keep];
    }
    let kept_norm = s[..keep].iter().map(|x| x * x).sum::<f64>().sqrt();
    let s_kept: Vec<f64> = s[..keep].iter().map(|x| x / kept_norm).collect();
    let u_kept = Matrix::from_fn(u.nrows(), keep, |r, k| u[(r, order[k])]);
    let vt_kept = Matrix::from_fn(keep, vt.ncols(), |k, col| vt[(order[k], col)]);
    // exact zeros dropped by the cutoff are not counted as truncation
    let counted = s[keep..]
        .iter()
        .filter(|&&x| x > ZERO_CUTOFF * smax)
        .map(|x| x * x)
        .sum::<f64>();
    let relative = if total > 0.0 { counted / total } else { 0.0 };
    (u_kept, s_kept, vt_kept, relative)
}

/// Runs a bound circuit on an MPS starting from `|0…0⟩`.
pub fn mps_simulate(circuit: &Circuit, config: MpsConfig) -> Result<MpsState, MpsError> {
    let mut state = MpsState::new(circuit.n_qubits(), config)?;
    for (index, gate) in circuit.gates().iter().enumerate() {
        state.apply_gate_indexed(gate, index, config.route_swaps)?;
    }
    Ok(state)
}

/// Entropy of each interior bond of a state.
pub fn bond_entropies(state: &mut MpsState) -> Vec<f64> {
    state.bond_entropies()
}

/// Bond entropies sampled after selected numbers of applied gates.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyProfile {
    /// Gate counts at which the rows were taken (0 = initial state).
    pub checkpoints: Vec<usize>,
    /// `rows[i][k]`: entropy of bond `k` at `checkpoints[i]`.
    pub rows: Vec<Vec<f64>>,
    pub discarded_weight: f64,
    pub swaps_inserted: usize,
}

impl EntropyProfile {
    pub fn n_bonds(&self) -> usize {
        self.rows.first().map(Vec::len).unwrap_or(0)
    }

    /// Maximum over checkpoints, per bond.
    pub fn max_over_time(&self) -> Vec<f64> {
        (0..self.n_bonds())
            .map(|k| self.rows.iter().map(|r| r[k]).fold(0.0, f64::max))
            .collect()
    }

    /// Mean over checkpoints, per bond.
    pub fn mean_over_time(&self) -> Vec<f64> {
        let n = self.rows.len().max(1) as f64;
        (0..self.n_bonds())
            .map(|k| self.rows.iter().map(|r| r[k]).sum::<f64>() / n)
            .collect()
    }

    /// CSV with one row per checkpoint: `checkpoint,bond_0,…`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), MpsError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["checkpoint".to_string()];
        header.extend((0..self.n_bonds()).map(|k| format!("bond_{k}")));
        w.write_record(&header)
            .map_err(|e| MpsError::Csv(e.to_string()))?;
        for (cp, row) in self.checkpoints.iter().zip(&self.rows) {
            let mut rec = vec![cp.to_string()];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(&rec)
                .map_err(|e| MpsError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| MpsError::Csv(e.to_string()))
    }
}

/// Bond entropies of the evolving state at each checkpoint (number of gates
/// applied so far).
pub fn entropy_profile(
    circuit: &Circuit,
    checkpoints: &[usize],
    config: MpsConfig,
) -> Result<EntropyProfile, MpsError> {
    let total = circuit.len();
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.iter().any(|&c| c > total) {
        return Err(MpsError::BadCheckpoints(total));
    }
    let mut state = MpsState::new(circuit.n_qubits(), config)?;
    let mut rows = Vec::with_capacity(checkpoints.len());
    let mut applied = 0;
    for &cp in checkpoints {
        while applied < cp {
            state.apply_gate_indexed(&circuit.gates()[applied], applied, config.route_swaps)?;
            applied += 1;
        }
        rows.push(state.bond_entropies());
    }
    Ok(EntropyProfile {
        checkpoints: checkpoints.to_vec(),
        rows,
        discarded_weight: state.discarded_weight(),
        swaps_inserted: state.swaps_inserted(),
    })
}
