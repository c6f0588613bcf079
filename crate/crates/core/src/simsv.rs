//! Dense statevector simulator.
//!
//! Gates are applied in place by iterating over amplitude pairs (or groups of
//! `2^k` amplitudes for `k`-qubit gates); no full-register matrix is ever
//! built. Sampling uses ChaCha8 seeded from a `u64` and inverse-CDF lookup over
//! the amplitudes in index order, so counts are reproducible across runs and
//! machines.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind, PauliString, PauliSum};
use crate::linalg::Matrix;
use crate::C64;

/// Largest register the simulator will allocate (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{0} qubits exceeds the simulator cap of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("circuit has unbound parameter `{0}`")]
    Unbound(String),
    #[error("width mismatch: state has {state} qubits, operand has {other}")]
    WidthMismatch { state: usize, other: usize },
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error("initial state is not normalised (norm² = {0})")]
    NotNormalised(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self, SimError> {
        if n_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n_qubits));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, SimError> {
        let mut s = Self::zero(n_qubits)?;
        s.amps[0] = C64::new(0.0, 0.0);
        s.amps[index] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, SimError> {
        if !amps.len().is_power_of_two() {
            return Err(SimError::BadLength(amps.len()));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n_qubits));
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-8 {
            return Err(SimError::NotNormalised(norm2));
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// Like [`StateVector::from_amplitudes`] but without the norm check; used
    /// for projected (sub-normalised) branches.
    pub(crate) fn from_raw(amps: Vec<C64>) -> Self {
        StateVector {
            n_qubits: amps.len().trailing_zeros() as usize,
            amps,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Applies one bound gate; `Measure` is a no-op.
    pub fn apply(&mut self, gate: &Gate) -> Result<(), SimError> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.n_qubits) {
            return Err(SimError::WidthMismatch {
                state: self.n_qubits,
                other: q + 1,
            });
        }
        let qs = gate.qubits();
        match gate.kind() {
            GateKind::Measure => {}
            GateKind::CX => self.apply_cx(qs[0], qs[1]),
            GateKind::CZ => self.apply_cz(qs[0], qs[1]),
            GateKind::RZZ => {
                let theta = gate.angle().ok_or_else(|| unbound(gate))?;
                self.apply_rzz(qs[0], qs[1], theta)
            }
            GateKind::Unitary => {
                let m = gate
                    .unitary_matrix()
                    .expect("unitary gate carries a matrix");
                self.apply_matrix(qs, m)
            }
            _ => {
                let m = gate.matrix().ok_or_else(|| unbound(gate))?;
                self.apply_1q(qs[0], [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]);
            }
        }
        Ok(())
    }

    /// Row-major 2×2 matrix on `q`.
    pub fn apply_1q(&mut self, q: usize, m: [C64; 4]) {
        let stride = 1usize << q;
        for base in (0..self.amps.len()).step_by(stride << 1) {
            for i in base..base + stride {
                let (a0, a1) = (self.amps[i], self.amps[i + stride]);
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[i + stride] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    fn apply_rzz(&mut self, a: usize, b: usize, theta: f64) {
        let even = C64::from_polar(1.0, -theta / 2.0);
        let odd = even.conj();
        for (i, amp) in self.amps.iter_mut().enumerate() {
            let parity = ((i >> a) ^ (i >> b)) & 1;
            *amp *= if parity == 0 { even } else { odd };
        }
    }

    /// Dense `2^k × 2^k` matrix on `qubits` (local bit `i` ↔ `qubits[i]`).
    pub fn apply_matrix(&mut self, qubits: &[usize], m: &Matrix) {
        let k = qubits.len();
        let dim = 1usize << k;
        let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
        let offsets: Vec<usize> = (0..dim)
            .map(|local| {
                (0..k)
                    .filter(|b| local >> b & 1 == 1)
                    .map(|b| 1usize << qubits[b])
                    .sum()
            })
            .collect();
        let mut buf = vec![C64::new(0.0, 0.0); dim];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (slot, off) in buf.iter_mut().zip(&offsets) {
                *slot = self.amps[base + off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (col, v) in buf.iter().enumerate() {
                    acc += m[(row, col)] * v;
                }
                self.amps[base + off] = acc;
            }
        }
    }

    /// Keeps only the component with `qubit` in `outcome`, without
    /// renormalising.
    pub(crate) fn project(&mut self, qubit: usize, outcome: usize) {
        let m = 1usize << qubit;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & m != 0) as usize != outcome {
                *a = C64::new(0.0, 0.0);
            }
        }
    }

    /// ⟨ψ|P|ψ⟩ for a single string (unnormalised states give the weighted
    /// value).
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64, SimError> {
        if p.len() != self.n_qubits {
            return Err(SimError::WidthMismatch {
                state: self.n_qubits,
                other: p.len(),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (j, phase) = p.apply_to_basis(i);
            acc += self.amps[j].conj() * phase * a;
        }
        Ok(acc.re)
    }
}

fn unbound(gate: &Gate) -> SimError {
    SimError::Unbound(gate.param().map(|p| p.to_string()).unwrap_or_default())
}

/// Runs a bound circuit from `initial` (default `|0…0⟩`). Measurements are
/// ignored.
pub fn simulate(circuit: &Circuit, initial: Option<&StateVector>) -> Result<StateVector, SimError> {
    let n = circuit.n_qubits();
    if n > MAX_QUBITS {
        return Err(SimError::TooManyQubits(n));
    }
    if let Some(name) = circuit.params().first() {
        return Err(SimError::Unbound(name.clone()));
    }
    let mut state = match initial {
        Some(s) if s.n_qubits != n => {
            return Err(SimError::WidthMismatch {
                state: s.n_qubits,
                other: n,
            })
        }
        Some(s) => s.clone(),
        None => StateVector::zero(n)?,
    };
    for gate in circuit.gates() {
        state.apply(gate)?;
    }
    Ok(state)
}

/// Σ_t c_t ⟨ψ|P_t|ψ⟩.
pub fn expectation(state: &StateVector, obs: &PauliSum) -> Result<f64, SimError> {
    if obs.n_qubits() != state.n_qubits {
        return Err(SimError::WidthMismatch {
            state: state.n_qubits,
            other: obs.n_qubits(),
        });
    }
    let mut total = 0.0;
    for (c, p) in obs.terms() {
        total += c * state.pauli_expectation(p)?;
    }
    Ok(total)
}

/// Formats a basis index as a bitstring with qubit 0 rightmost.
pub fn bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .rev()
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Draws `shots` computational-basis samples.
pub fn sample(state: &StateVector, shots: usize, seed: u64) -> BTreeMap<String, usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_indices(&state.probabilities(), shots, &mut rng)
        .into_iter()
        .map(|(i, c)| (bitstring(i, state.n_qubits), c))
        .collect()
}

/// Inverse-CDF sampling of basis indices from (possibly unnormalised)
/// weights.
pub fn sample_indices<R: Rng>(
    weights: &[f64],
    shots: usize,
    rng: &mut R,
) -> BTreeMap<usize, usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let mut idx = cdf.partition_point(|&c| c <= u).min(weights.len() - 1);
        // never land on a zero-probability index due to rounding at the top
        while weights[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        *counts.entry(idx).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: C64, re: f64, im: f64) -> bool {
        (a - C64::new(re, im)).norm() < 1e-12
    }

    #[test]
    fn hadamard_and_bell() {
        let c = Circuit::new(1).unwrap().with(Gate::h(0)).unwrap();
        let s = simulate(&c, None).unwrap();
        assert!(
            close(s.amplitudes()[0], FRAC_1_SQRT_2, 0.0)
                && close(s.amplitudes()[1], FRAC_1_SQRT_2, 0.0)
        );
        let c = Circuit::new(2)
            .unwrap()
            .with(Gate::h(0))
            .unwrap()
            .with(Gate::cx(0, 1))
            .unwrap();
        let s = simulate(&c, None).unwrap();
        let a = s.amplitudes();
        assert!(close(a[0], FRAC_1_SQRT_2, 0.0) && close(a[3], FRAC_1_SQRT_2, 0.0));
        assert!(close(a[1], 0.0, 0.0) && close(a[2], 0.0, 0.0));
    }

    #[test]
    fn expectations() {
        let zero = StateVector::zero(1).unwrap();
        assert_eq!(
            expectation(&zero, &PauliSum::from_labels(&[(1.0, "Z")]).unwrap()).unwrap(),
            1.0
        );
        let ghz = Circuit::new(3)
            .unwrap()
            .with(Gate::h(0))
            .unwrap()
            .with(Gate::cx(0, 1))
            .unwrap()
            .with(Gate::cx(1, 2))
            .unwrap();
        let s = simulate(&ghz, None).unwrap();
        let v = expectation(&s, &PauliSum::from_labels(&[(1.0, "IZZ")]).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // ⟨X⟩ on RY(θ)|0⟩ = sin θ; oracle: (cos θ/2, sin θ/2) gives 2 sin(θ/2)cos(θ/2)
        for th in [0.3, 1.1] {
            let c = Circuit::new(1).unwrap().with(Gate::ry(0, th)).unwrap();
            let s = simulate(&c, None).unwrap();
            let x = expectation(&s, &PauliSum::from_labels(&[(1.0, "X")]).unwrap()).unwrap();
            let oracle = 2.0 * (th / 2.0).sin() * (th / 2.0).cos();
            assert!((x - oracle).abs() < 1e-12);
        }
        assert!(expectation(&s_zero2(), &PauliSum::from_labels(&[(1.0, "Z")]).unwrap()).is_err());
    }

    fn s_zero2() -> StateVector {
        StateVector::zero(2).unwrap()
    }

    #[test]
    fn sampling_is_seeded() {
        let zero = StateVector::zero(1).unwrap();
        let counts = sample(&zero, 100, 1);
        assert_eq!(counts.len(), 1);
        assert_eq!(counts["0"], 100);
        let bell = simulate(
            &Circuit::new(2)
                .unwrap()
                .with(Gate::h(0))
                .unwrap()
                .with(Gate::cx(0, 1))
                .unwrap(),
            None,
        )
        .unwrap();
        let a = sample(&bell, 10_000, 42);
        let b = sample(&bell, 10_000, 42);
        assert_eq!(a, b);
        assert_eq!(
            a.get("00").unwrap_or(&0) + a.get("11").unwrap_or(&0),
            10_000
        );
        // 4σ for p=0.5, N=10⁴ is 0.02
        let p00 = a["00"] as f64 / 1e4;
        assert!((p00 - 0.5).abs() < 0.02);
    }

    #[test]
    fn cap_and_unbound_errors() {
        assert_eq!(
            StateVector::zero(MAX_QUBITS + 1),
            Err(SimError::TooManyQubits(MAX_QUBITS + 1))
        );
        let c = Circuit::new(1).unwrap().with(Gate::rz(0, "a")).unwrap();
        assert!(matches!(simulate(&c, None), Err(SimError::Unbound(_))));
    }

    #[test]
    fn bitstring_order() {
        assert_eq!(bitstring(1, 3), "001");
        assert_eq!(bitstring(6, 3), "110");
    }
}
