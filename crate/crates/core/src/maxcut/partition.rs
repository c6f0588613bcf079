use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    optimize, sample_assignment, CutAssignment, Edge, Graph, MaxcutError, OptimizerConfig,
    QaoaParams,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Sorted node lists, ordered by smallest member.
    pub communities: Vec<Vec<usize>>,
    pub inter_edges: Vec<Edge>,
}

impl Partition {
    fn from_labels(graph: &Graph, label: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (node, &l) in label.iter().enumerate() {
            groups.entry(l).or_default().push(node);
        }
        let mut communities: Vec<Vec<usize>> = groups.into_values().collect();
        communities.sort_by_key(|c| c[0]);
        let inter_edges = graph
            .edges()
            .iter()
            .filter(|e| label[e.u] != label[e.v])
            .copied()
            .collect();
        Partition {
            communities,
            inter_edges,
        }
    }

    /// Community index of every node.
    pub fn membership(&self, n_nodes: usize) -> Vec<usize> {
        let mut m = vec![0; n_nodes];
        for (k, c) in self.communities.iter().enumerate() {
            for &v in c {
                m[v] = k;
            }
        }
        m
    }
}

/// Greedy agglomeration: repeatedly merge the connected pair of
/// communities with the largest modularity gain
/// `ΔQ = 2(e_ab − a_a a_b)` whose union fits in `cap`. Merging continues
/// while any such pair exists; ties go to the lexicographically smallest
/// pair of community labels.
pub fn partition_graph(graph: &Graph, cap: usize) -> Result<Partition, MaxcutError> {
    if cap < 2 {
        return Err(MaxcutError::BadParams(
            "community size cap must be at least 2".into(),
        ));
    }
    let n = graph.n_nodes();
    if cap >= n {
        return Ok(Partition::from_labels(graph, &vec![0; n]));
    }
    let two_m = 2.0 * graph.total_weight();
    if two_m == 0.0 {
        return Ok(Partition::from_labels(graph, &(0..n).collect::<Vec<_>>()));
    }
    let mut label: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut strength: Vec<f64> = graph.degrees().iter().map(|d| d / two_m).collect();
    // between[(a, b)] with a < b: fraction of edge ends joining a and b
    let mut between: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in graph.edges() {
        if e.w > 0.0 {
            *between.entry((e.u, e.v)).or_default() += e.w / two_m;
        }
    }
    loop {
        let mut best: Option<((usize, usize), f64)> = None;
        for (&(a, b), &e_ab) in &between {
            if size[a] + size[b] > cap {
                continue;
            }
            let dq = 2.0 * (e_ab - strength[a] * strength[b]);
            if best.is_none_or(|(_, d)| dq > d) {
                best = Some(((a, b), dq));
            }
        }
        let Some(((a, b), _)) = best else { break };
        // merge b into a
        for l in label.iter_mut() {
            if *l == b {
                *l = a;
            }
        }
        size[a] += size[b];
        size[b] = 0;
        strength[a] += strength[b];
        strength[b] = 0.0;
        let entries: Vec<((usize, usize), f64)> = between.iter().map(|(&k, &v)| (k, v)).collect();
        between.clear();
        for ((x, y), v) in entries {
            let x = if x == b { a } else { x };
            let y = if y == b { a } else { y };
            if x != y {
                *between.entry((x.min(y), x.max(y))).or_default() += v;
            }
        }
    }
    Ok(Partition::from_labels(graph, &label))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMode {
    /// Brute force up to [`BRUTE_FORCE_LIMIT`] communities, local search above.
    #[default]
    Auto,
    Brute,
    Local,
}

pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Clone, Debug)]
pub struct Qaoa2Config {
    pub cap: usize,
    pub p: usize,
    pub shots: usize,
    pub merge: MergeMode,
    pub optimizer: OptimizerConfig,
}

impl Qaoa2Config {
    pub fn new(cap: usize, p: usize) -> Self {
        Qaoa2Config {
            cap,
            p,
            shots: 1024,
            merge: MergeMode::Auto,
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Qaoa2Result {
    pub assignment: CutAssignment,
    pub partition: Partition,
    /// Per-community assignment in local labels, before sign merging.
    pub local: Vec<CutAssignment>,
    pub local_params: Vec<Option<QaoaParams>>,
    /// `+1` keeps a community's sides, `−1` flips them.
    pub signs: Vec<i8>,
    /// Total cut with every sign `+1`.
    pub unmerged_cut: f64,
}

/// Signed community-level graph: `same[(a, b)]` is the cut weight between
/// communities `a < b` when their signs agree, `diff[(a, b)]` when they
/// differ.
struct MergeProblem {
    k: usize,
    pairs: Vec<(usize, usize, f64, f64)>,
}

impl MergeProblem {
    fn new(partition: &Partition, membership: &[usize], side: &[u8]) -> Self {
        let k = partition.communities.len();
        let mut acc: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
        for e in &partition.inter_edges {
            let (a, b) = (membership[e.u], membership[e.v]);
            let key = (a.min(b), a.max(b));
            let entry = acc.entry(key).or_default();
            if side[e.u] != side[e.v] {
                entry.0 += e.w;
            } else {
                entry.1 += e.w;
            }
        }
        MergeProblem {
            k,
            pairs: acc
                .into_iter()
                .map(|((a, b), (s, d))| (a, b, s, d))
                .collect(),
        }
    }

    fn value(&self, signs: &[i8]) -> f64 {
        self.pairs
            .iter()
            .map(|&(a, b, same, diff)| if signs[a] == signs[b] { same } else { diff })
            .sum()
    }

    fn brute(&self) -> Vec<i8> {
        let mut best = (self.value(&vec![1; self.k]), 0usize);
        let free = self.k.saturating_sub(1);
        let mut signs = vec![1i8; self.k];
        for mask in 1..1usize << free {
            for (i, s) in signs.iter_mut().enumerate().skip(1) {
                *s = if mask >> (i - 1) & 1 == 1 { -1 } else { 1 };
            }
            let v = self.value(&signs);
            if v > best.0 {
                best = (v, mask);
            }
        }
        (0..self.k)
            .map(|i| {
                if i > 0 && best.1 >> (i - 1) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect()
    }

    /// Steepest-ascent single flips from all `+1`.
    fn local(&self) -> Vec<i8> {
        let mut signs = vec![1i8; self.k];
        let mut current = self.value(&signs);
        loop {
            let mut best: Option<(f64, usize)> = None;
            for i in 0..self.k {
                signs[i] = -signs[i];
                let v = self.value(&signs);
                signs[i] = -signs[i];
                if v > current + 1e-12 && best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, i));
                }
            }
            match best {
                Some((v, i)) => {
                    signs[i] = -signs[i];
                    current = v;
                }
                None => return signs,
            }
        }
    }
}

/// Divide and conquer: partition, solve each community with QAOA
/// concurrently, then choose community flips to maximise the total cut.
pub fn qaoa_squared(
    graph: &Graph,
    cfg: &Qaoa2Config,
    seed: u64,
) -> Result<Qaoa2Result, MaxcutError> {
    if cfg.cap > crate::simsv::MAX_QUBITS {
        return Err(MaxcutError::TooLarge(cfg.cap));
    }
    let partition = partition_graph(graph, cfg.cap)?;
    let k = partition.communities.len();
    if cfg.merge == MergeMode::Brute && k > BRUTE_FORCE_LIMIT {
        return Err(MaxcutError::TooManyCommunities(k));
    }
    let solved = partition
        .communities
        .par_iter()
        .enumerate()
        .map(|(i, nodes)| {
            let sub = graph.subgraph(nodes);
            if sub.edges().is_empty() {
                return Ok((CutAssignment::new(&sub, vec![0; nodes.len()]), None));
            }
            let s = seed.wrapping_add(i as u64);
            let r = optimize(&sub, cfg.p, &cfg.optimizer, s)?;
            let a = sample_assignment(&sub, &r.params, cfg.shots, s)?;
            Ok((a, Some(r.params)))
        })
        .collect::<Result<Vec<_>, MaxcutError>>()?;
    let (local, local_params): (Vec<CutAssignment>, Vec<Option<QaoaParams>>) =
        solved.into_iter().unzip();

    let n = graph.n_nodes();
    let mut side = vec![0u8; n];
    for (nodes, a) in partition.communities.iter().zip(&local) {
        for (j, &v) in nodes.iter().enumerate() {
            side[v] = a.side[j];
        }
    }
    let membership = partition.membership(n);
    let unmerged_cut = graph.cut_value(&side);
    let problem = MergeProblem::new(&partition, &membership, &side);
    let signs = match cfg.merge {
        MergeMode::Brute => problem.brute(),
        MergeMode::Local => problem.local(),
        MergeMode::Auto if k <= BRUTE_FORCE_LIMIT => problem.brute(),
        MergeMode::Auto => problem.local(),
    };
    for v in 0..n {
        if signs[membership[v]] < 0 {
            side[v] = 1 - side[v];
        }
    }
    Ok(Qaoa2Result {
        assignment: CutAssignment::new(graph, side),
        partition,
        local,
        local_params,
        signs,
        unmerged_cut,
    })
}

/// One pass assigning each node to the side that cuts more weight towards
/// already placed neighbours, then single flips while any improves the cut.
pub fn baseline_greedy(graph: &Graph) -> CutAssignment {
    let n = graph.n_nodes();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in graph.edges() {
        adj[e.u].push((e.v, e.w));
        adj[e.v].push((e.u, e.w));
    }
    let mut side = vec![0u8; n];
    for v in 0..n {
        let (mut to0, mut to1) = (0.0, 0.0);
        for &(u, w) in adj[v].iter().filter(|(u, _)| *u < v) {
            if side[u] == 0 {
                to0 += w;
            } else {
                to1 += w;
            }
        }
        // joining side 1 cuts the edges to side-0 neighbours
        side[v] = u8::from(to0 > to1);
    }
    loop {
        let mut best: Option<(f64, usize)> = None;
        for v in 0..n {
            let gain: f64 = adj[v]
                .iter()
                .map(|&(u, w)| if side[u] == side[v] { w } else { -w })
                .sum();
            if gain > 1e-12 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, v));
            }
        }
        match best {
            Some((_, v)) => side[v] = 1 - side[v],
            None => break,
        }
    }
    CutAssignment::new(graph, side)
}

/// Best of `trials` uniform assignments. When `trials ≥ 2^n` (and `n ≤ 20`)
/// every assignment is enumerated instead.
pub fn baseline_random(graph: &Graph, trials: usize, seed: u64) -> CutAssignment {
    let n = graph.n_nodes();
    if n <= 20 && trials >= 1usize << n {
        return (0..1usize << n)
            .map(|x| CutAssignment::from_index(graph, x))
            .fold(None::<CutAssignment>, |b, a| match b {
                Some(b) if b.cut_value >= a.cut_value => Some(b),
                _ => Some(a),
            })
            .expect("at least one assignment");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = CutAssignment::new(graph, vec![0; n]);
    for t in 0..trials {
        let side: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        let a = CutAssignment::new(graph, side);
        if t == 0 || a.cut_value > best.cut_value {
            best = a;
        }
    }
    best
}
