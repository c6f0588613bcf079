//! HHL linear solver on the statevector simulator.
//!
//! Register layout for an `n`-qubit system and `m` clock qubits: system
//! qubits `0..n`, clock qubits `n..n+m`, ancilla `n+m`. The circuit prepares
//! `|b⟩`, runs phase estimation of `U = e^{2πi·A·scale}`, rotates the
//! ancilla by `arcsin(1/j)` for clock value `j`, and uncomputes the phase
//! estimation. The solution is read from the amplitudes with ancilla `1`
//! and clock `0`.

mod io;
mod qpe;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, PauliString, PauliSum};
use crate::linalg::{
    c, expi_hermitian, hermitian_eigenvalues, hermiticity_defect, unitary_with_first_column, Matrix,
};
use crate::simsv::{simulate, SimError, MAX_QUBITS};
use crate::C64;

pub use io::{read_system_json, write_run_log, SystemInput};
pub use qpe::{
    controlled_phase, controlled_unitary, dft_matrix, inverse_qft, inversion_rotation, qft,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HhlError {
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is {rows}×{cols} but b has length {b}")]
    Shape { rows: usize, cols: usize, b: usize },
    #[error("right-hand side is zero")]
    ZeroRhs,
    #[error("scaled eigenvalues must lie in (0, 1); found range [{0}, {1}]")]
    Spectrum(f64, f64),
    #[error("clock register needs at least one qubit")]
    NoClock,
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("postselection probability is zero")]
    ZeroSuccess,
    #[error("{0} qubits exceeds the simulator cap")]
    TooManyQubits(usize),
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub a: Matrix,
    pub b: Vec<C64>,
    /// System qubits.
    pub n: usize,
    /// Clock qubits.
    pub m: usize,
    pub scale: f64,
}

/// Largest Gershgorin disc radius bound `max_i Σ_j |a_ij|`.
pub fn gershgorin_bound(a: &Matrix) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl LinearSystem {
    /// Validates the system and sets `scale = 1 / (2 · Gershgorin bound)`.
    pub fn new(a: Matrix, b: Vec<C64>, m: usize) -> Result<Self, HhlError> {
        let dim = a.nrows();
        if a.ncols() != dim || b.len() != dim {
            return Err(HhlError::Shape {
                rows: dim,
                cols: a.ncols(),
                b: b.len(),
            });
        }
        if !dim.is_power_of_two() || dim < 2 {
            return Err(HhlError::NotPowerOfTwo(dim));
        }
        let defect = hermiticity_defect(&a);
        if defect > 1e-10 {
            return Err(HhlError::NotHermitian(defect));
        }
        if b.iter().all(|x| x.norm() == 0.0) {
            return Err(HhlError::ZeroRhs);
        }
        if m == 0 {
            return Err(HhlError::NoClock);
        }
        let bound = gershgorin_bound(&a);
        let sys = LinearSystem {
            n: dim.trailing_zeros() as usize,
            a,
            b,
            m,
            scale: 0.5 / bound,
        };
        sys.check_spectrum()?;
        Ok(sys)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self, HhlError> {
        self.scale = scale;
        self.check_spectrum()?;
        Ok(self)
    }

    fn check_spectrum(&self) -> Result<(), HhlError> {
        let ev = self.scaled_eigenvalues();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if !(lo > 0.0 && hi < 1.0) {
            return Err(HhlError::Spectrum(lo, hi));
        }
        Ok(())
    }

    /// Ascending eigenvalues of `A · scale`.
    pub fn scaled_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.a)
            .into_iter()
            .map(|l| l * self.scale)
            .collect()
    }

    pub fn total_qubits(&self) -> usize {
        self.n + self.m + 1
    }

    pub fn b_normalized(&self) -> Vec<C64> {
        let norm = self.b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        self.b.iter().map(|x| x / norm).collect()
    }

    /// A note when the smallest scaled eigenvalue falls below one clock
    /// step and so cannot be resolved.
    pub fn resolution_warning(&self) -> Option<String> {
        let lo = self.scaled_eigenvalues()[0];
        let step = 1.0 / (1u64 << self.m) as f64;
        (lo < step).then(|| {
            format!("smallest scaled eigenvalue {lo:.3e} is below the clock resolution {step:.3e}")
        })
    }

    /// Random real SPD system: Haar-like orthogonal eigenbasis, eigenvalues
    /// uniform in `[1, cond]`, Gaussian `b`.
    pub fn random_spd(n: usize, cond: f64, m: usize, seed: u64) -> Result<Self, HhlError> {
        let dim = 1usize << n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Matrix::from_fn(dim, dim, |_, _| c(StandardNormal.sample(&mut rng), 0.0));
        let q = g.qr().q();
        let spread =
            Uniform::new_inclusive(1.0, cond).map_err(|e| HhlError::Input(e.to_string()))?;
        let eig: Vec<f64> = (0..dim).map(|_| spread.sample(&mut rng)).collect();
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            eig.iter().map(|&l| c(l, 0.0)),
        ));
        let mut a = &q * d * q.adjoint();
        // exact symmetry
        a = (&a + a.adjoint()) * c(0.5, 0.0);
        let b = (0..dim)
            .map(|_| c(StandardNormal.sample(&mut rng), 0.0))
            .collect();
        LinearSystem::new(a, b, m)
    }
}

/// `Σ_P c_P P` with `c_P = Tr(P A) / 2^n` over all `4^n` strings; exact
/// zeros (relative to the matrix scale) are dropped.
pub fn pauli_decompose(a: &Matrix) -> Result<PauliSum, HhlError> {
    let dim = a.nrows();
    if a.ncols() != dim || !dim.is_power_of_two() {
        return Err(HhlError::NotPowerOfTwo(dim));
    }
    let defect = hermiticity_defect(a);
    if defect > 1e-10 {
        return Err(HhlError::NotHermitian(defect));
    }
    let n = dim.trailing_zeros() as usize;
    let tol = 1e-14 * a.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut sum = PauliSum::zero(n);
    for code in 0..1usize << (2 * n) {
        let ops = (0..n)
            .map(|q| match code >> (2 * q) & 3 {
                0 => crate::circuit::Pauli::I,
                1 => crate::circuit::Pauli::X,
                2 => crate::circuit::Pauli::Y,
                _ => crate::circuit::Pauli::Z,
            })
            .collect();
        let p = PauliString::from_ops(ops);
        // Tr(P A) = Σ_j ⟨j|P A|j⟩ = Σ_j phase_j · A[j, j ^ x]
        let mut tr = c(0.0, 0.0);
        for j in 0..dim {
            let (i, phase) = p.apply_to_basis(j);
            tr += phase * a[(j, i)];
        }
        let coeff = tr.re / dim as f64;
        if coeff.abs() > tol {
            sum.add_term(coeff, p).expect("width matches");
        }
    }
    Ok(sum)
}

/// Dense matrix of a Pauli sum.
pub fn pauli_sum_matrix(sum: &PauliSum) -> Matrix {
    let dim = 1usize << sum.n_qubits();
    let mut m = Matrix::zeros(dim, dim);
    for (coeff, p) in sum.terms() {
        for j in 0..dim {
            let (i, phase) = p.apply_to_basis(j);
            m[(i, j)] += phase * *coeff;
        }
    }
    m
}

/// Which of the four steps to include; used to check the pieces separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HhlSteps {
    pub rotation: bool,
    pub uncompute: bool,
}

impl Default for HhlSteps {
    fn default() -> Self {
        HhlSteps {
            rotation: true,
            uncompute: true,
        }
    }
}

pub fn build_hhl_circuit(sys: &LinearSystem) -> Result<Circuit, HhlError> {
    build_hhl_circuit_with(sys, HhlSteps::default())
}

pub fn build_hhl_circuit_with(sys: &LinearSystem, steps: HhlSteps) -> Result<Circuit, HhlError> {
    let (n, m) = (sys.n, sys.m);
    let total = sys.total_qubits();
    let system: Vec<usize> = (0..n).collect();
    let clock: Vec<usize> = (n..n + m).collect();
    let ancilla = n + m;

    let mut circ = Circuit::new(total)?;
    circ.append(Gate::unitary(
        system.clone(),
        unitary_with_first_column(&sys.b_normalized()),
    )?)?;

    let mut qpe = Circuit::new(total)?;
    for &q in &clock {
        qpe.append(Gate::h(q))?;
    }
    let a_scaled = &sys.a * c(sys.scale, 0.0);
    for (k, &q) in clock.iter().enumerate() {
        let power = (1u64 << k) as f64;
        let u = expi_hermitian(&a_scaled, 2.0 * std::f64::consts::PI * power);
        qpe.append(controlled_unitary(q, &system, &u)?)?;
    }
    qpe.extend(inverse_qft(total, &clock)?.gates().iter().cloned())?;

    circ.extend(qpe.gates().iter().cloned())?;
    if steps.rotation {
        circ.append(inversion_rotation(&clock, ancilla)?)?;
    }
    if steps.uncompute {
        circ.extend(qpe.inverse()?.gates().iter().cloned())?;
    }
    Ok(circ)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HhlResult {
    /// Normalised postselected system amplitudes.
    pub x_quantum: Vec<C64>,
    pub x_classical: Vec<C64>,
    /// `x_quantum` with its global phase aligned to `x_classical` and its
    /// norm recovered from the success probability.
    pub x_estimate: Vec<C64>,
    /// `min_φ ‖e^{iφ} x_quantum − x_classical/‖x_classical‖‖₂`.
    pub deviation: f64,
    pub success_prob: f64,
    pub pauli_terms: usize,
    pub warnings: Vec<String>,
}

/// `min_φ ‖e^{iφ} u − v‖` for unit vectors `u`, `v`.
pub fn phase_aligned_distance(u: &[C64], v: &[C64]) -> f64 {
    let overlap: C64 = v.iter().zip(u).map(|(a, b)| a.conj() * b).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap.conj() / overlap.norm()
    } else {
        c(1.0, 0.0)
    };
    u.iter()
        .zip(v)
        .map(|(a, b)| (a * phase - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn normalized(v: &[C64]) -> Vec<C64> {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

pub fn solve(sys: &LinearSystem) -> Result<HhlResult, HhlError> {
    let total = sys.total_qubits();
    if total > MAX_QUBITS {
        return Err(HhlError::TooManyQubits(total));
    }
    let circ = build_hhl_circuit(sys)?;
    let state = simulate(&circ, None)?;
    let dim = 1usize << sys.n;
    let offset = 1usize << (sys.n + sys.m);
    let post: Vec<C64> = state.amplitudes()[offset..offset + dim].to_vec();
    let success_prob: f64 = post.iter().map(|x| x.norm_sqr()).sum();
    if success_prob <= 0.0 {
        return Err(HhlError::ZeroSuccess);
    }
    let x_quantum = normalized(&post);
    let x_classical = classical_solve(&sys.a, &sys.b)?;
    let xc_unit = normalized(&x_classical);
    let deviation = phase_aligned_distance(&x_quantum, &xc_unit);

    let overlap: C64 = xc_unit
        .iter()
        .zip(&x_quantum)
        .map(|(a, b)| a.conj() * b)
        .sum();
    let align = if overlap.norm() > 0.0 {
        overlap.conj() / overlap.norm()
    } else {
        c(1.0, 0.0)
    };
    let b_norm = sys.b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let clock_step = 1.0 / (1u64 << sys.m) as f64;
    let magnitude = sys.scale * b_norm * success_prob.sqrt() / clock_step;
    let x_estimate = x_quantum.iter().map(|x| x * align * magnitude).collect();

    Ok(HhlResult {
        x_quantum,
        x_classical,
        x_estimate,
        deviation,
        success_prob,
        pauli_terms: pauli_decompose(&sys.a)?.terms().len(),
        warnings: sys.resolution_warning().into_iter().collect(),
    })
}

/// Solves `A x = b` by LU with partial pivoting; fails when the relative
/// residual exceeds `1e−10`.
pub fn classical_solve(a: &Matrix, b: &[C64]) -> Result<Vec<C64>, HhlError> {
    let dim = a.nrows();
    if a.ncols() != dim || b.len() != dim {
        return Err(HhlError::Shape {
            rows: dim,
            cols: a.ncols(),
            b: b.len(),
        });
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = a.clone().lu().solve(&rhs).ok_or(HhlError::Singular)?;
    let b_norm = rhs.norm();
    let resid = (a * &x - &rhs).norm() / if b_norm > 0.0 { b_norm } else { 1.0 };
    if resid.is_nan() || resid >= 1e-10 {
        return Err(HhlError::Singular);
    }
    Ok(x.iter().copied().collect())
}
