//! Discrete-event list scheduler for hybrid jobs.
//!
//! Under the monolithic policy a job holds one classical node (if it has a
//! classical phase) and one QPU (if it has a quantum phase) from its first
//! phase to its last. Under the split policy every block acquires one
//! resource of its own kind only while it runs. Both use non-delay list scheduling in integer ticks: at
//! each event time, ready work is started in FIFO order (ready time, then
//! job, then block order) on the lowest-numbered free resource.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::DispatchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    #[serde(alias = "c")]
    Classical,
    #[serde(alias = "q")]
    Quantum,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobBlock {
    pub id: String,
    pub job: usize,
    pub order: usize,
    pub kind: BlockKind,
    pub duration: u64,
    pub deps: Vec<String>,
}

/// One block per phase of job `job`, chained: `J_job_1 → J_job_2 → …`.
pub fn split_job(job: usize, phases: &[(BlockKind, u64)]) -> Result<Vec<JobBlock>, DispatchError> {
    if phases.is_empty() {
        return Err(DispatchError::Workload(format!("job {job} has no phases")));
    }
    Ok(phases
        .iter()
        .enumerate()
        .map(|(k, &(kind, duration))| {
            let order = k + 1;
            let deps = if k == 0 {
                vec![]
            } else {
                vec![format!("J_{job}_{}", order - 1)]
            };
            JobBlock {
                id: format!("J_{job}_{order}"),
                job,
                order,
                kind,
                duration,
                deps,
            }
        })
        .collect())
}

/// Splits every job of a workload; jobs are numbered from 1.
pub fn split_workload(jobs: &[Vec<(BlockKind, u64)>]) -> Result<Vec<JobBlock>, DispatchError> {
    let mut out = Vec::new();
    for (i, phases) in jobs.iter().enumerate() {
        out.extend(split_job(i + 1, phases)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resources {
    pub n_classical: usize,
    pub n_qpu: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Monolithic,
    Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Resource {
    Classical(usize),
    Qpu(usize),
}

impl std::fmt::Display for Resource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resource::Classical(i) => write!(f, "cpu{i}"),
            Resource::Qpu(i) => write!(f, "qpu{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub block: String,
    pub resource: Resource,
    pub start: u64,
    pub end: u64,
}

/// A span during which a resource is held, whether or not it is working.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reservation {
    pub job: usize,
    pub resource: Resource,
    pub start: u64,
    pub end: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    /// QPU ticks spent running quantum blocks.
    pub qpu_busy: u64,
    /// QPU ticks held by reservations.
    pub qpu_reserved: u64,
    /// `qpu_reserved − qpu_busy`.
    pub qpu_reserved_idle: u64,
    /// `1 − qpu_busy / (n_qpu · makespan)`; 0 for an empty schedule.
    pub qpu_idle_fraction: f64,
    pub makespan: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub policy: Policy,
    pub resources: Resources,
    pub placements: Vec<Placement>,
    pub reservations: Vec<Reservation>,
    pub metrics: Metrics,
}

impl Schedule {
    /// Timeline CSV: `block,resource,start,end`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DispatchError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| DispatchError::Io(e.to_string());
        w.write_record(["block", "resource", "start", "end"])
            .map_err(io)?;
        for p in &self.placements {
            w.write_record([
                p.block.clone(),
                p.resource.to_string(),
                p.start.to_string(),
                p.end.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| DispatchError::Io(e.to_string()))
    }
}

pub fn compute_metrics(
    resources: &Resources,
    blocks: &[JobBlock],
    placements: &[Placement],
    reservations: &[Reservation],
) -> Metrics {
    let kinds: BTreeMap<&str, BlockKind> = blocks.iter().map(|b| (b.id.as_str(), b.kind)).collect();
    let qpu_busy = placements
        .iter()
        .filter(|p| kinds.get(p.block.as_str()) == Some(&BlockKind::Quantum))
        .map(|p| p.end - p.start)
        .sum();
    let qpu_reserved: u64 = reservations
        .iter()
        .filter(|r| matches!(r.resource, Resource::Qpu(_)))
        .map(|r| r.end - r.start)
        .sum();
    let makespan = placements.iter().map(|p| p.end).max().unwrap_or(0);
    let capacity = resources.n_qpu as u64 * makespan;
    Metrics {
        qpu_busy,
        qpu_reserved,
        qpu_reserved_idle: qpu_reserved - qpu_busy,
        qpu_idle_fraction: if capacity == 0 {
            0.0
        } else {
            1.0 - qpu_busy as f64 / capacity as f64
        },
        makespan,
    }
}

/// Block indices in a dependency-respecting order, or an error naming an
/// unknown dependency or a cycle.
fn topo_order(blocks: &[JobBlock]) -> Result<Vec<usize>, DispatchError> {
    let index: BTreeMap<&str, usize> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    if index.len() != blocks.len() {
        return Err(DispatchError::Workload("duplicate block id".into()));
    }
    let mut indeg = vec![0usize; blocks.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
    for (i, b) in blocks.iter().enumerate() {
        for d in &b.deps {
            let &j = index.get(d.as_str()).ok_or_else(|| {
                DispatchError::Workload(format!("{} depends on unknown block {d}", b.id))
            })?;
            indeg[i] += 1;
            users[j].push(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..blocks.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(blocks.len());
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &u in &users[i] {
            indeg[u] -= 1;
            if indeg[u] == 0 {
                ready.insert(u);
            }
        }
    }
    if order.len() != blocks.len() {
        return Err(DispatchError::Cyclic);
    }
    Ok(order)
}

/// A schedulable unit: one block (split) or one whole job (monolithic).
struct Task {
    /// Blocks run back to back, in this order.
    blocks: Vec<usize>,
    needs_classical: bool,
    needs_qpu: bool,
    duration: u64,
    deps: Vec<usize>,
    job: usize,
    order: usize,
}

/// Schedules `blocks` under `policy`. The split schedule is the better (by
/// makespan, list schedule on ties) of the plain list schedule and the
/// monolithic block order left-shifted onto per-block reservations, so it
/// never finishes later than the monolithic one.
pub fn schedule(
    blocks: &[JobBlock],
    resources: &Resources,
    policy: Policy,
) -> Result<Schedule, DispatchError> {
    match policy {
        Policy::Monolithic => list_policy(blocks, resources, policy),
        Policy::Split => {
            let list = list_policy(blocks, resources, Policy::Split)?;
            let mono = list_policy(blocks, resources, Policy::Monolithic)?;
            let shifted = left_shift(blocks, &mono);
            Ok(if shifted.metrics.makespan < list.metrics.makespan {
                shifted
            } else {
                list
            })
        }
    }
}

/// Keeps each resource's block sequence from `s` and starts every block as
/// early as its dependencies and its resource predecessor allow, holding a
/// resource only while a block runs.
fn left_shift(blocks: &[JobBlock], s: &Schedule) -> Schedule {
    let topo_pos: BTreeMap<&str, usize> = topo_order(blocks)
        .expect("already validated")
        .into_iter()
        .enumerate()
        .map(|(pos, i)| (blocks[i].id.as_str(), pos))
        .collect();
    let by_id: BTreeMap<&str, &JobBlock> = blocks.iter().map(|b| (b.id.as_str(), b)).collect();
    let mut order: Vec<&Placement> = s.placements.iter().collect();
    order.sort_by_key(|p| (p.start, p.end, topo_pos[p.block.as_str()]));
    let mut ends: BTreeMap<&str, u64> = BTreeMap::new();
    let mut free: BTreeMap<Resource, u64> = BTreeMap::new();
    let mut placements = Vec::with_capacity(order.len());
    for p in order {
        let b = by_id[p.block.as_str()];
        let ready = b.deps.iter().map(|d| ends[d.as_str()]).max().unwrap_or(0);
        let start = ready.max(free.get(&p.resource).copied().unwrap_or(0));
        let end = start + b.duration;
        ends.insert(b.id.as_str(), end);
        free.insert(p.resource, end);
        placements.push(Placement {
            block: b.id.clone(),
            resource: p.resource,
            start,
            end,
        });
    }
    placements.sort_by(|a, b| (a.start, &a.block).cmp(&(b.start, &b.block)));
    let mut reservations: Vec<Reservation> = placements
        .iter()
        .map(|p| Reservation {
            job: by_id[p.block.as_str()].job,
            resource: p.resource,
            start: p.start,
            end: p.end,
        })
        .collect();
    reservations.sort_by_key(|r| (r.start, r.resource));
    let metrics = compute_metrics(&s.resources, blocks, &placements, &reservations);
    Schedule {
        policy: Policy::Split,
        resources: s.resources,
        placements,
        reservations,
        metrics,
    }
}

fn list_policy(
    blocks: &[JobBlock],
    resources: &Resources,
    policy: Policy,
) -> Result<Schedule, DispatchError> {
    if resources.n_classical == 0 || resources.n_qpu == 0 {
        return Err(DispatchError::Workload(
            "need at least one classical node and one QPU".into(),
        ));
    }
    let topo = topo_order(blocks)?;
    let index: BTreeMap<&str, usize> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let tasks: Vec<Task> = match policy {
        Policy::Split => blocks
            .iter()
            .map(|b| Task {
                blocks: vec![index[b.id.as_str()]],
                needs_classical: b.kind == BlockKind::Classical,
                needs_qpu: b.kind == BlockKind::Quantum,
                duration: b.duration,
                deps: b.deps.iter().map(|d| index[d.as_str()]).collect(),
                job: b.job,
                order: b.order,
            })
            .collect(),
        Policy::Monolithic => {
            let jobs: BTreeSet<usize> = blocks.iter().map(|b| b.job).collect();
            let job_slot: BTreeMap<usize, usize> =
                jobs.iter().enumerate().map(|(k, &j)| (j, k)).collect();
            let mut tasks: Vec<Task> = jobs
                .iter()
                .map(|&j| Task {
                    blocks: vec![],
                    needs_classical: false,
                    needs_qpu: false,
                    duration: 0,
                    deps: vec![],
                    job: j,
                    order: 0,
                })
                .collect();
            for &i in &topo {
                let b = &blocks[i];
                let t = &mut tasks[job_slot[&b.job]];
                t.blocks.push(i);
                t.duration += b.duration;
                t.needs_qpu |= b.kind == BlockKind::Quantum;
                t.needs_classical |= b.kind == BlockKind::Classical;
                for d in &b.deps {
                    let dj = job_slot[&blocks[index[d.as_str()]].job];
                    if dj != job_slot[&b.job] && !t.deps.contains(&dj) {
                        t.deps.push(dj);
                    }
                }
            }
            tasks
        }
    };
    if policy == Policy::Monolithic {
        // job-level dependencies must stay acyclic
        let pseudo: Vec<JobBlock> = tasks
            .iter()
            .enumerate()
            .map(|(k, t)| JobBlock {
                id: k.to_string(),
                job: t.job,
                order: 0,
                kind: BlockKind::Classical,
                duration: 0,
                deps: t.deps.iter().map(|d| d.to_string()).collect(),
            })
            .collect();
        topo_order(&pseudo)?;
    }
    let (starts, cpu, qpu) = list_schedule(&tasks, resources);

    let mut placements = Vec::new();
    let mut reservations = Vec::new();
    for (k, t) in tasks.iter().enumerate() {
        let mut clock = starts[k];
        for &bi in &t.blocks {
            let b = &blocks[bi];
            let resource = match b.kind {
                BlockKind::Classical => {
                    Resource::Classical(cpu[k].expect("classical task holds a node"))
                }
                BlockKind::Quantum => Resource::Qpu(qpu[k].expect("quantum task holds a QPU")),
            };
            placements.push(Placement {
                block: b.id.clone(),
                resource,
                start: clock,
                end: clock + b.duration,
            });
            clock += b.duration;
        }
        let end = starts[k] + t.duration;
        if let Some(c) = cpu[k] {
            reservations.push(Reservation {
                job: t.job,
                resource: Resource::Classical(c),
                start: starts[k],
                end,
            });
        }
        if let Some(q) = qpu[k] {
            reservations.push(Reservation {
                job: t.job,
                resource: Resource::Qpu(q),
                start: starts[k],
                end,
            });
        }
    }
    placements.sort_by(|a, b| (a.start, &a.block).cmp(&(b.start, &b.block)));
    reservations.sort_by_key(|r| (r.start, r.resource));
    let metrics = compute_metrics(resources, blocks, &placements, &reservations);
    Ok(Schedule {
        policy,
        resources: *resources,
        placements,
        reservations,
        metrics,
    })
}

type Assignment = (Vec<u64>, Vec<Option<usize>>, Vec<Option<usize>>);

fn list_schedule(tasks: &[Task], res: &Resources) -> Assignment {
    let n = tasks.len();
    let mut start = vec![0u64; n];
    let mut end = vec![0u64; n];
    let mut cpu = vec![None; n];
    let mut qpu = vec![None; n];
    let mut done = vec![false; n];
    let mut started = vec![false; n];
    let mut cpu_free = vec![0u64; res.n_classical];
    let mut qpu_free = vec![0u64; res.n_qpu];
    let mut remaining = n;
    let mut now = 0u64;
    while remaining > 0 {
        for k in 0..n {
            if started[k] && !done[k] && end[k] <= now {
                done[k] = true;
                remaining -= 1;
            }
        }
        if remaining == 0 {
            break;
        }
        // ready: all deps finished; FIFO by ready time, job, order
        let mut ready: Vec<(u64, usize, usize, usize)> = (0..n)
            .filter(|&k| !started[k] && tasks[k].deps.iter().all(|&d| done[d]))
            .map(|k| {
                (
                    tasks[k].deps.iter().map(|&d| end[d]).max().unwrap_or(0),
                    tasks[k].job,
                    tasks[k].order,
                    k,
                )
            })
            .collect();
        ready.sort_unstable();
        for &(_, _, _, k) in &ready {
            let t = &tasks[k];
            let c = if t.needs_classical {
                cpu_free.iter().position(|&f| f <= now)
            } else {
                None
            };
            let q = if t.needs_qpu {
                qpu_free.iter().position(|&f| f <= now)
            } else {
                None
            };
            if (t.needs_classical && c.is_none()) || (t.needs_qpu && q.is_none()) {
                continue;
            }
            started[k] = true;
            start[k] = now;
            end[k] = now + t.duration;
            if let Some(c) = c {
                cpu_free[c] = end[k];
                cpu[k] = Some(c);
            }
            if let Some(q) = q {
                qpu_free[q] = end[k];
                qpu[k] = Some(q);
            }
        }
        // zero-length tasks finish immediately and may release successors
        if (0..n).any(|k| started[k] && !done[k] && end[k] <= now) {
            continue;
        }
        now = (0..n)
            .filter(|&k| started[k] && !done[k])
            .map(|k| end[k])
            .min()
            .expect("running task while work remains");
    }
    (start, cpu, qpu)
}

/// Checks that no resource is double-booked and every dependency finishes
/// before its dependant starts.
pub fn validate_schedule(blocks: &[JobBlock], s: &Schedule) -> Result<(), String> {
    let placed: BTreeMap<&str, &Placement> =
        s.placements.iter().map(|p| (p.block.as_str(), p)).collect();
    if placed.len() != blocks.len() {
        return Err(format!(
            "{} placements for {} blocks",
            placed.len(),
            blocks.len()
        ));
    }
    for b in blocks {
        let p = placed
            .get(b.id.as_str())
            .ok_or(format!("{} not placed", b.id))?;
        if p.end - p.start != b.duration {
            return Err(format!("{} has the wrong length", b.id));
        }
        let kind_ok = matches!(
            (b.kind, p.resource),
            (BlockKind::Classical, Resource::Classical(_)) | (BlockKind::Quantum, Resource::Qpu(_))
        );
        if !kind_ok {
            return Err(format!("{} placed on {}", b.id, p.resource));
        }
        for d in &b.deps {
            if placed[d.as_str()].end > p.start {
                return Err(format!("{} starts before {d} ends", b.id));
            }
        }
    }
    let overlap = |spans: Vec<(Resource, u64, u64)>| -> Result<(), String> {
        let mut by_res: BTreeMap<Resource, Vec<(u64, u64)>> = BTreeMap::new();
        for (r, a, b) in spans {
            if b > a {
                by_res.entry(r).or_default().push((a, b));
            }
        }
        for (r, mut v) in by_res {
            v.sort_unstable();
            if v.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(format!("overlap on {r}"));
            }
        }
        Ok(())
    };
    if s.policy == Policy::Split {
        overlap(
            s.placements
                .iter()
                .map(|p| (p.resource, p.start, p.end))
                .collect(),
        )?;
    }
    overlap(
        s.reservations
            .iter()
            .map(|r| (r.resource, r.start, r.end))
            .collect(),
    )?;
    let m = compute_metrics(&s.resources, blocks, &s.placements, &s.reservations);
    if m != s.metrics {
        return Err("metrics do not match placements".into());
    }
    Ok(())
}

/// A phase written either as `{"kind": "classical", "duration": 10}` or as
/// `["c", 10]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum PhaseInput {
    Object { kind: BlockKind, duration: u64 },
    Pair(BlockKind, u64),
}

/// Parses a JSON list of jobs, each a list of phases.
pub fn parse_workload(text: &str) -> Result<Vec<Vec<(BlockKind, u64)>>, DispatchError> {
    let jobs: Vec<Vec<PhaseInput>> =
        serde_json::from_str(text).map_err(|e| DispatchError::Workload(e.to_string()))?;
    Ok(jobs
        .into_iter()
        .map(|phases| {
            phases
                .into_iter()
                .map(|p| match p {
                    PhaseInput::Object { kind, duration } | PhaseInput::Pair(kind, duration) => {
                        (kind, duration)
                    }
                })
                .collect()
        })
        .collect())
}
