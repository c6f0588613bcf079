use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::C64;

use super::CircuitError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(ch: char) -> Option<Pauli> {
        Some(match ch {
            'I' => Pauli::I,
            'X' => Pauli::X,
            'Y' => Pauli::Y,
            'Z' => Pauli::Z,
            _ => return None,
        })
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis, indexed by qubit.
///
/// The textual form follows bitstring order: the rightmost character acts on
/// qubit 0, so `"IZ"` is `Z` on qubit 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            ops: vec![Pauli::I; n],
        }
    }

    /// From per-qubit operators (`ops[q]` acts on qubit `q`).
    pub fn from_ops(ops: Vec<Pauli>) -> Self {
        PauliString { ops }
    }

    /// Identity except for the listed `(qubit, op)` pairs.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(n);
        for &(q, p) in ops {
            s.ops[q] = p;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, qubit: usize) -> Pauli {
        self.ops[qubit]
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn is_diagonal(&self) -> bool {
        self.ops.iter().all(|p| matches!(p, Pauli::I | Pauli::Z))
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|p| *p == Pauli::I)
    }

    /// Bit-flip mask (X or Y positions).
    pub fn x_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::X | Pauli::Y))
    }

    /// Phase mask (Z or Y positions).
    pub fn z_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::Z | Pauli::Y))
    }

    pub fn y_count(&self) -> usize {
        self.ops.iter().filter(|p| **p == Pauli::Y).count()
    }

    fn mask(&self, pred: impl Fn(Pauli) -> bool) -> usize {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, p)| pred(**p))
            .fold(0, |m, (q, _)| m | (1 << q))
    }

    /// `P|i⟩ = phase · |i ⊕ x_mask⟩`; returns `(i ⊕ x_mask, phase)`.
    pub fn apply_to_basis(&self, index: usize) -> (usize, C64) {
        let ipow = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ];
        let mut phase = ipow[self.y_count() % 4];
        if (index & self.z_mask()).count_ones() % 2 == 1 {
            phase = -phase;
        }
        (index ^ self.x_mask(), phase)
    }

    /// ±1 eigenvalue of a diagonal string on a computational basis index.
    pub fn diagonal_sign(&self, index: usize) -> f64 {
        if (index & self.z_mask()).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Restriction to the qubit range `[start, start + len)`, relabelled from 0.
    pub fn slice(&self, start: usize, len: usize) -> PauliString {
        PauliString {
            ops: self.ops[start..start + len].to_vec(),
        }
    }
}

impl FromStr for PauliString {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(CircuitError::InvalidPauli(s.into()));
        }
        let ops = s
            .chars()
            .rev()
            .map(|ch| Pauli::from_char(ch).ok_or_else(|| CircuitError::InvalidPauli(s.into())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PauliString { ops })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.ops.iter().rev().map(|p| p.as_char()).collect();
        f.write_str(&s)
    }
}

/// Real-weighted sum of Pauli strings with merged duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self, CircuitError>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        let mut sum = Self::zero(n_qubits);
        for (c, s) in terms {
            sum.add_term(c, s)?;
        }
        Ok(sum)
    }

    /// Parses `(coefficient, label)` pairs; the width is taken from the labels.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self, CircuitError> {
        let parsed = terms
            .iter()
            .map(|(c, l)| l.parse::<PauliString>().map(|s| (*c, s)))
            .collect::<Result<Vec<_>, _>>()?;
        let n = parsed.first().map(|(_, s)| s.len()).unwrap_or(0);
        Self::from_terms(n, parsed)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, coeff: f64, string: PauliString) -> Result<(), CircuitError> {
        if string.len() != self.n_qubits {
            return Err(CircuitError::WidthMismatch {
                expected: self.n_qubits,
                got: string.len(),
            });
        }
        match self.terms.iter_mut().find(|(_, s)| *s == string) {
            Some((c, _)) => *c += coeff,
            None => self.terms.push((coeff, string)),
        }
        Ok(())
    }

    /// Coefficient of the all-identity string.
    pub fn identity_coeff(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(_, s)| s.is_identity())
            .map(|(c, _)| *c)
            .sum()
    }

    /// Σ|c_t|, the bound on any expectation value.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Drops terms with |c| ≤ `tol`.
    pub fn pruned(&self, tol: f64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| c.abs() > tol)
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (c, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}*{s}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: f64,
    pauli: String,
}

/// JSON form: `[{"coeff": 1.0, "pauli": "ZZ"}, ...]`.
impl Serialize for PauliSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr: Vec<TermRepr> = self
            .terms
            .iter()
            .map(|(c, s)| TermRepr {
                coeff: *c,
                pauli: s.to_string(),
            })
            .collect();
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = Vec::<TermRepr>::deserialize(deserializer)?;
        let pairs: Vec<(f64, &str)> = repr.iter().map(|t| (t.coeff, t.pauli.as_str())).collect();
        PauliSum::from_labels(&pairs).map_err(serde::de::Error::custom)
    }
}

/// Expectation of a diagonal observable estimated from bitstring counts.
///
/// Bitstrings use the same order as Pauli labels: the rightmost character is
/// qubit 0.
pub fn pauli_expectation_terms(
    sum: &PauliSum,
    counts: &BTreeMap<String, usize>,
) -> Result<f64, CircuitError> {
    if let Some((_, s)) = sum.terms().iter().find(|(_, s)| !s.is_diagonal()) {
        return Err(CircuitError::NonDiagonal(s.to_string()));
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(CircuitError::EmptyCounts);
    }
    let mut value = 0.0;
    for (bits, &count) in counts {
        if bits.len() != sum.n_qubits() {
            return Err(CircuitError::InvalidBitstring(bits.clone()));
        }
        let index = usize::from_str_radix(bits, 2)
            .map_err(|_| CircuitError::InvalidBitstring(bits.clone()))?;
        let e: f64 = sum
            .terms()
            .iter()
            .map(|(c, s)| c * s.diagonal_sign(index))
            .sum();
        value += e * count as f64;
    }
    Ok(value / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn label_order_is_bitstring_order() {
        let s: PauliString = "XIZ".parse().unwrap();
        assert_eq!(s.op(0), Pauli::Z);
        assert_eq!(s.op(2), Pauli::X);
        assert_eq!(s.to_string(), "XIZ");
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn merging_terms() {
        let mut sum = PauliSum::zero(1);
        sum.add_term(0.5, "Z".parse().unwrap()).unwrap();
        sum.add_term(0.5, "Z".parse().unwrap()).unwrap();
        assert_eq!(sum.terms().len(), 1);
        assert_eq!(sum.terms()[0].0, 1.0);
        assert!(sum.add_term(1.0, "ZZ".parse().unwrap()).is_err());
    }

    #[test]
    fn expectation_from_counts() {
        let z = PauliSum::from_labels(&[(1.0, "Z")]).unwrap();
        assert_eq!(
            pauli_expectation_terms(&z, &counts(&[("0", 100)])).unwrap(),
            1.0
        );
        let zz = PauliSum::from_labels(&[(1.0, "ZZ")]).unwrap();
        assert_eq!(
            pauli_expectation_terms(&zz, &counts(&[("00", 50), ("11", 50)])).unwrap(),
            1.0
        );
        // IZ reads qubit 0 (+1 on "10", -1 on "01"), ZI reads qubit 1
        let mixed = PauliSum::from_labels(&[(0.5, "IZ"), (0.5, "ZI")]).unwrap();
        assert_eq!(
            pauli_expectation_terms(&mixed, &counts(&[("01", 50), ("10", 50)])).unwrap(),
            0.0
        );
        let x = PauliSum::from_labels(&[(1.0, "X")]).unwrap();
        assert!(matches!(
            pauli_expectation_terms(&x, &counts(&[("0", 1)])),
            Err(CircuitError::NonDiagonal(_))
        ));
        assert_eq!(
            pauli_expectation_terms(&z, &BTreeMap::new()),
            Err(CircuitError::EmptyCounts)
        );
    }

    #[test]
    fn basis_action_of_y() {
        let y: PauliString = "Y".parse().unwrap();
        assert_eq!(y.apply_to_basis(0), (1, C64::new(0.0, 1.0)));
        assert_eq!(y.apply_to_basis(1), (0, C64::new(0.0, -1.0)));
    }

    #[test]
    fn json_round_trip() {
        let sum = PauliSum::from_labels(&[(0.5, "IZ"), (-1.25, "XY")]).unwrap();
        let text = serde_json::to_string(&sum).unwrap();
        assert_eq!(
            text,
            r#"[{"coeff":0.5,"pauli":"IZ"},{"coeff":-1.25,"pauli":"XY"}]"#
        );
        let back: PauliSum = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sum);
    }
}
