use std::io::Write;

use serde::Deserialize;

use crate::linalg::{c, Matrix};
use crate::C64;

use super::{HhlError, HhlResult, LinearSystem};

/// A number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Entry> for C64 {
    fn from(e: Entry) -> C64 {
        match e {
            Entry::Real(x) => c(x, 0.0),
            Entry::Complex([re, im]) => c(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Rows(Vec<Vec<Entry>>),
    Flat(Vec<Entry>),
}

/// `{"A": …, "b": […], "m": 6}` where `A` is either a list of rows or a
/// flat row-major list, and every entry is a number or `[re, im]`.
#[derive(Clone, Debug, Deserialize)]
pub struct SystemInput {
    #[serde(rename = "A")]
    a: MatrixInput,
    b: Vec<Entry>,
    m: usize,
    #[serde(default)]
    scale: Option<f64>,
}

impl SystemInput {
    pub fn into_system(self) -> Result<LinearSystem, HhlError> {
        let flat: Vec<C64> = match self.a {
            MatrixInput::Rows(rows) => {
                let dim = rows.len();
                if rows.iter().any(|r| r.len() != dim) {
                    return Err(HhlError::Input("matrix rows have unequal lengths".into()));
                }
                rows.into_iter().flatten().map(C64::from).collect()
            }
            MatrixInput::Flat(v) => v.into_iter().map(C64::from).collect(),
        };
        let dim = (flat.len() as f64).sqrt().round() as usize;
        if dim * dim != flat.len() {
            return Err(HhlError::Input(format!(
                "{} matrix entries do not form a square",
                flat.len()
            )));
        }
        let a = Matrix::from_row_slice(dim, dim, &flat);
        let b = self.b.into_iter().map(C64::from).collect();
        let sys = LinearSystem::new(a, b, self.m)?;
        match self.scale {
            Some(s) => sys.with_scale(s),
            None => Ok(sys),
        }
    }
}

pub fn read_system_json(text: &str) -> Result<LinearSystem, HhlError> {
    let input: SystemInput =
        serde_json::from_str(text).map_err(|e| HhlError::Input(e.to_string()))?;
    input.into_system()
}

/// Per-component comparison table followed by nothing else; the deviation
/// is repeated on every row so the file stands alone.
pub fn write_run_log<W: Write>(result: &HhlResult, out: W) -> Result<(), HhlError> {
    let io = |e: csv::Error| HhlError::Input(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "component",
        "x_quantum_re",
        "x_quantum_im",
        "x_classical_re",
        "x_classical_im",
        "abs_diff",
        "deviation",
        "success_prob",
    ])
    .map_err(io)?;
    for (i, (q, cl)) in result
        .x_estimate
        .iter()
        .zip(&result.x_classical)
        .enumerate()
    {
        w.write_record([
            i.to_string(),
            format!("{}", q.re),
            format!("{}", q.im),
            format!("{}", cl.re),
            format!("{}", cl.im),
            format!("{}", (q - cl).norm()),
            format!("{}", result.deviation),
            format!("{}", result.success_prob),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| HhlError::Input(e.to_string()))
}
