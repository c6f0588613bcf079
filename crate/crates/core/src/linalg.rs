//! Small dense linear-algebra helpers shared by the simulators.

use nalgebra::DMatrix;

use crate::C64;

/// Dense complex matrix.
pub type Matrix = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Kronecker product `a ⊗ b`.
///
/// With little-endian indexing this places `b` on the low qubits.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Largest entrywise deviation of `m† m` from the identity.
pub fn unitarity_defect(m: &Matrix) -> f64 {
    let prod = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - c(target, 0.0)).norm());
        }
    }
    worst
}

/// Largest entrywise deviation of `m` from `m†`.
pub fn hermiticity_defect(m: &Matrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Applies `f` to the eigenvalues of a Hermitian matrix: `V f(Λ) V†`.
pub fn hermitian_function(h: &Matrix, f: impl Fn(f64) -> C64) -> Matrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(&f));
    v * d * v.adjoint()
}

/// `exp(i·t·H)` for Hermitian `H`.
pub fn expi_hermitian(h: &Matrix, t: f64) -> Matrix {
    hermitian_function(h, |lambda| C64::from_polar(1.0, t * lambda))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &Matrix) -> Vec<f64> {
    let mut vals: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Completes `first` (a unit vector) to a unitary whose first column is
/// `first`, using modified Gram-Schmidt against the computational basis.
pub fn unitary_with_first_column(first: &[C64]) -> Matrix {
    let dim = first.len();
    let mut cols: Vec<Vec<C64>> = vec![first.to_vec()];
    for e in 0..dim {
        if cols.len() == dim {
            break;
        }
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[e] = C64::new(1.0, 0.0);
        // two passes keep the basis orthonormal to machine precision
        for _ in 0..2 {
            for col in &cols {
                let overlap: C64 = col.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ci) in v.iter_mut().zip(col) {
                    *vi -= overlap * ci;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Matrix::from_fn(dim, dim, |i, j| cols[j][i])
}
