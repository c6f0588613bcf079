use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};

use super::KnitError;

/// Open Ising chain `H = Σ J_i Z_i Z_{i+1} + Σ h_i X_i + Σ g_i Z_i` evolved
/// for time `t` in `steps` first-order Trotter steps.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinChainSpec {
    pub n_qubits: usize,
    /// `n − 1` nearest-neighbour couplings.
    pub j: Vec<f64>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub t: f64,
    pub steps: usize,
}

/// Uniform disorder ranges `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disorder {
    pub j: (f64, f64),
    pub h: (f64, f64),
    pub g: (f64, f64),
    pub seed: u64,
}

impl Disorder {
    /// The strongly disordered ensemble used for overhead studies: couplings
    /// spread over `[0, 1)` so some bonds are nearly decoupled.
    pub fn strong(seed: u64) -> Self {
        Disorder {
            j: (0.0, 1.0),
            h: (0.5, 1.0),
            g: (0.0, 0.5),
            seed,
        }
    }
}

impl SpinChainSpec {
    pub fn new(
        n_qubits: usize,
        j: Vec<f64>,
        h: Vec<f64>,
        g: Vec<f64>,
        t: f64,
        steps: usize,
    ) -> Result<Self, KnitError> {
        let spec = SpinChainSpec {
            n_qubits,
            j,
            h,
            g,
            t,
            steps,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Draws `J` then `h` then `g` site by site from one seeded stream.
    pub fn disordered(
        n_qubits: usize,
        t: f64,
        steps: usize,
        disorder: &Disorder,
    ) -> Result<Self, KnitError> {
        if n_qubits < 2 {
            return Err(KnitError::BadSpec("n_qubits must be at least 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(disorder.seed);
        let mut draw = |(lo, hi): (f64, f64), count: usize| -> Result<Vec<f64>, KnitError> {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(KnitError::BadSpec(format!(
                    "bad disorder range [{lo}, {hi})"
                )));
            }
            Ok((0..count)
                .map(|_| {
                    if lo == hi {
                        lo
                    } else {
                        rng.random_range(lo..hi)
                    }
                })
                .collect())
        };
        let j = draw(disorder.j, n_qubits - 1)?;
        let h = draw(disorder.h, n_qubits)?;
        let g = draw(disorder.g, n_qubits)?;
        SpinChainSpec::new(n_qubits, j, h, g, t, steps)
    }

    fn validate(&self) -> Result<(), KnitError> {
        let bad = |m: String| Err(KnitError::BadSpec(m));
        if self.n_qubits < 2 {
            return bad("n_qubits must be at least 2".into());
        }
        if self.steps < 1 {
            return bad("steps must be at least 1".into());
        }
        if self.j.len() != self.n_qubits - 1
            || self.h.len() != self.n_qubits
            || self.g.len() != self.n_qubits
        {
            return bad(format!(
                "expected {} couplings and {} fields",
                self.n_qubits - 1,
                self.n_qubits
            ));
        }
        if !self.t.is_finite()
            || self
                .j
                .iter()
                .chain(&self.h)
                .chain(&self.g)
                .any(|x| !x.is_finite())
        {
            return bad("non-finite parameter".into());
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t / self.steps as f64
    }
}

/// Per step: `RZZ(2 J_i dt)` on each bond, then `RX(2 h_i dt)` and
/// `RZ(2 g_i dt)` on each site. Rotations by exactly zero are left out.
pub fn build_spinchain_circuit(spec: &SpinChainSpec) -> Circuit {
    let n = spec.n_qubits;
    let dt = spec.dt();
    let mut c = Circuit::new(n).expect("validated spec has qubits");
    let mut push = |g: Gate| {
        c.append(g).expect("indices in range");
    };
    for _ in 0..spec.steps {
        for (i, &j) in spec.j.iter().enumerate() {
            if j != 0.0 {
                push(Gate::rzz(i, i + 1, 2.0 * j * dt));
            }
        }
        for q in 0..n {
            if spec.h[q] != 0.0 {
                push(Gate::rx(q, 2.0 * spec.h[q] * dt));
            }
            if spec.g[q] != 0.0 {
                push(Gate::rz(q, 2.0 * spec.g[q] * dt));
            }
        }
    }
    c
}

/// JSON form of a chain: either explicit `j`/`h`/`g` arrays or a
/// `disorder` block (explicit arrays win when both are given).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinChainConfig {
    pub n_qubits: usize,
    pub t: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<Disorder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
}

impl SpinChainConfig {
    pub fn to_spec(&self) -> Result<SpinChainSpec, KnitError> {
        match (&self.j, &self.h, &self.g, &self.disorder) {
            (Some(j), Some(h), Some(g), _) => SpinChainSpec::new(
                self.n_qubits,
                j.clone(),
                h.clone(),
                g.clone(),
                self.t,
                self.steps,
            ),
            (_, _, _, Some(d)) => {
                let mut spec = SpinChainSpec::disordered(self.n_qubits, self.t, self.steps, d)?;
                if let Some(j) = &self.j {
                    spec.j = j.clone();
                }
                if let Some(h) = &self.h {
                    spec.h = h.clone();
                }
                if let Some(g) = &self.g {
                    spec.g = g.clone();
                }
                spec.validate()?;
                Ok(spec)
            }
            _ => Err(KnitError::BadSpec(
                "give j, h and g arrays or a disorder block".into(),
            )),
        }
    }
}
