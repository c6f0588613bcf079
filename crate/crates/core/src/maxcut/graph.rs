use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MaxcutError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected simple graph with non-negative edge weights. Edges are stored
/// with `u < v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn new(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, MaxcutError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (u, v, w) in edges {
            if u >= n_nodes || v >= n_nodes {
                return Err(MaxcutError::InvalidGraph(format!(
                    "edge ({u}, {v}) outside {n_nodes} nodes"
                )));
            }
            if u == v {
                return Err(MaxcutError::InvalidGraph(format!("self-loop on node {u}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(MaxcutError::InvalidGraph(format!(
                    "edge ({u}, {v}) has weight {w}"
                )));
            }
            let (a, b) = (u.min(v), u.max(v));
            if !seen.insert((a, b)) {
                return Err(MaxcutError::InvalidGraph(format!(
                    "duplicate edge ({a}, {b})"
                )));
            }
            out.push(Edge { u: a, v: b, w });
        }
        Ok(Graph {
            n_nodes,
            edges: out,
        })
    }

    pub fn unweighted(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self, MaxcutError> {
        Graph::new(n_nodes, edges.iter().map(|&(u, v)| (u, v, 1.0)))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn cycle(n: usize) -> Result<Self, MaxcutError> {
        Graph::unweighted(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    pub fn path(n: usize) -> Result<Self, MaxcutError> {
        Graph::unweighted(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>())
    }

    /// Erdős–Rényi `G(n, p)` with unit weights.
    pub fn random(n: usize, p: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v, 1.0));
                }
            }
        }
        Graph::new(n, edges).expect("generated edges are valid")
    }

    /// Induced subgraph on `nodes`, relabelled `0..nodes.len()` in order.
    pub fn subgraph(&self, nodes: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n_nodes];
        for (i, &n) in nodes.iter().enumerate() {
            index[n] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| index[e.u] != usize::MAX && index[e.v] != usize::MAX)
            .map(|e| Edge {
                u: index[e.u].min(index[e.v]),
                v: index[e.u].max(index[e.v]),
                w: e.w,
            })
            .collect();
        Graph {
            n_nodes: nodes.len(),
            edges,
        }
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_nodes];
        for e in &self.edges {
            d[e.u] += e.w;
            d[e.v] += e.w;
        }
        d
    }

    /// Parses `n_nodes` on the first line, then `u v [w]` per line. Blank
    /// lines and `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self, MaxcutError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(MaxcutError::Parse {
            line: 1,
            message: "missing node count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| MaxcutError::Parse {
            line: hline,
            message: format!("expected node count, found `{header}`"),
        })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let fields: Vec<&str> = l.split_whitespace().collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(MaxcutError::Parse {
                    line,
                    message: "expected `u v [weight]`".into(),
                });
            }
            let node = |s: &str| {
                s.parse::<usize>().map_err(|_| MaxcutError::Parse {
                    line,
                    message: format!("bad node `{s}`"),
                })
            };
            let (u, v) = (node(fields[0])?, node(fields[1])?);
            let w = match fields.get(2) {
                Some(s) => s.parse::<f64>().map_err(|_| MaxcutError::Parse {
                    line,
                    message: format!("bad weight `{s}`"),
                })?,
                None => 1.0,
            };
            edges.push((u, v, w));
        }
        Graph::new(n, edges)
    }

    pub fn read_edge_list(path: &Path) -> Result<Self, MaxcutError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MaxcutError::Io(format!("{}: {e}", path.display())))?;
        Graph::parse_edge_list(&text)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n_nodes);
        for e in &self.edges {
            s.push_str(&format!("{} {} {}\n", e.u, e.v, e.w));
        }
        s
    }

    /// Cut weight of an assignment given as side bits.
    pub fn cut_value(&self, side: &[u8]) -> f64 {
        self.edges
            .iter()
            .filter(|e| side[e.u] != side[e.v])
            .map(|e| e.w)
            .sum()
    }

    /// Cut weight of a basis index (bit `i` = side of node `i`).
    pub fn cut_of_index(&self, x: usize) -> f64 {
        self.edges
            .iter()
            .filter(|e| (x >> e.u ^ x >> e.v) & 1 == 1)
            .map(|e| e.w)
            .sum()
    }
}
