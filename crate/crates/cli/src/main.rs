use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use qstack::dispatch::{
    self, Client, JobRequest, JobStatus, Mode, Policy, Resources, ServerConfig,
};
use qstack::hhl;
use qstack::knit::{self, Aggregate, Constraints, EnsembleRow, SpinChainConfig};
use qstack::maxcut::{self, Graph, MaxcutReport, OptimizerConfig, Qaoa2Config};
use qstack::simmps::{entropy_profile, MpsConfig};

const DEFAULT_ADDR: &str = "127.0.0.1:7878";

#[derive(Parser, Debug)]
#[command(
    name = "qstack",
    version,
    about = "Hybrid quantum-classical workloads on simulated backends"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for ensembles and the server.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON file of flag defaults: top-level keys for global flags, one
    /// object per subcommand for the rest. Command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve A x = b with HHL and compare against a direct solve.
    Hhl {
        /// JSON system file: {"A": …, "b": …, "m": …}.
        system: PathBuf,
        /// Clock qubits (overrides the file).
        #[arg(long)]
        m: Option<usize>,
        /// Largest accepted deviation.
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        /// Write the comparison CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted MaxCut on an edge-list graph.
    Maxcut {
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Qaoa)]
        method: Method,
        /// QAOA depth.
        #[arg(long, default_value_t = 1)]
        p: usize,
        /// Largest community for qaoa2.
        #[arg(long, default_value_t = 8)]
        cap: usize,
        #[arg(long, default_value_t = 1024)]
        shots: usize,
        /// Samples for the random baseline.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Write a benchmark CSV row here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Adaptive versus baseline cut overhead on spin-chain circuits.
    Knit {
        /// JSON chain description.
        spec: PathBuf,
        /// Ensemble size when the chain has a disorder block; instance k
        /// uses disorder seed `--seed + k`.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        /// Bond-dimension cap for the entropy probe (exact when absent).
        #[arg(long)]
        chi: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        trunc_tol: f64,
        #[arg(long)]
        max_fragment: Option<usize>,
        #[arg(long)]
        imbalance: Option<usize>,
        #[arg(long, value_enum, default_value_t = AggregateArg::Max)]
        aggregate: AggregateArg,
        /// Write the ensemble CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare monolithic and split scheduling of hybrid jobs.
    Sched {
        /// JSON list of jobs, each a list of phases.
        workload: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::Both)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 2)]
        classical: usize,
        #[arg(long, default_value_t = 1)]
        qpu: usize,
        /// Write `<policy>.csv` timelines into this directory.
        #[arg(long)]
        timeline_dir: Option<PathBuf>,
    },
    /// Run the job server until a shutdown request arrives.
    Serve {
        #[arg(long, env = "QSTACK_ADDR", default_value = DEFAULT_ADDR)]
        listen: String,
    },
    /// Send a circuit to a running server and print the reply.
    Submit {
        /// OpenQASM 2 file.
        circuit: Option<PathBuf>,
        #[arg(long, env = "QSTACK_ADDR", default_value = DEFAULT_ADDR)]
        addr: String,
        /// Observable as JSON terms or a path to them (default Z on every
        /// qubit).
        #[arg(long)]
        observable: Option<String>,
        /// Sample this many shots with `--seed` instead of an exact run.
        #[arg(long)]
        shots: Option<usize>,
        /// Print the job id and return without waiting.
        #[arg(long)]
        no_wait: bool,
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        /// Ask the server to drain and stop afterwards.
        #[arg(long)]
        shutdown: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Qaoa,
    Qaoa2,
    Greedy,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AggregateArg {
    Max,
    Mean,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum PolicyArg {
    Monolithic,
    Split,
    Both,
}

/// Failure that maps to exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn read_input(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())).into())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args_os()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

const SUBCOMMANDS: [&str; 6] = ["hhl", "maxcut", "knit", "sched", "serve", "submit"];

/// Appends `--key value` for every config entry whose flag is not already
/// on the command line.
fn apply_config(mut argv: Vec<String>) -> Result<Vec<String>, String> {
    let path = argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else { return Ok(argv) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let serde_json::Value::Object(top) = value else {
        return Err(format!("{path}: expected a JSON object"));
    };
    let sub = argv
        .iter()
        .skip(1)
        .find(|a| SUBCOMMANDS.contains(&a.as_str()))
        .cloned();
    let mut entries: Vec<(String, serde_json::Value)> = Vec::new();
    for (k, v) in top {
        match v {
            serde_json::Value::Object(section) => {
                if !SUBCOMMANDS.contains(&k.as_str()) {
                    return Err(format!("{path}: unknown section {k}"));
                }
                if sub.as_deref() == Some(k.as_str()) {
                    entries.extend(section);
                }
            }
            v => entries.push((k, v)),
        }
    }
    for (k, v) in entries {
        let flag = format!("--{}", k.replace('_', "-"));
        if flag == "--config"
            || argv
                .iter()
                .any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
        {
            continue;
        }
        match v {
            serde_json::Value::Bool(true) => argv.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => argv.push(format!("{flag}={s}")),
            serde_json::Value::Number(n) => argv.push(format!("{flag}={n}")),
            _ => return Err(format!("{path}: {k} must be a scalar")),
        }
    }
    Ok(argv)
}

fn emit(
    out: &Option<PathBuf>,
    write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            write(&mut f)
        }
        None => write(&mut io::stdout().lock()),
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let seed = cli.seed;
    match cli.command {
        Command::Hhl {
            system,
            m,
            tol,
            out,
        } => run_hhl(&system, m, tol, &out),
        Command::Maxcut {
            graph,
            method,
            p,
            cap,
            shots,
            trials,
            csv,
        } => run_maxcut(&graph, method, p, cap, shots, trials, &csv, seed),
        Command::Knit {
            spec,
            seeds,
            chi,
            trunc_tol,
            max_fragment,
            imbalance,
            aggregate,
            out,
        } => {
            let mut constraints = Constraints::unconstrained();
            constraints.max_fragment = max_fragment.unwrap_or(usize::MAX);
            constraints.imbalance_tol = imbalance.unwrap_or(usize::MAX);
            constraints.aggregate = match aggregate {
                AggregateArg::Max => Aggregate::Max,
                AggregateArg::Mean => Aggregate::Mean,
            };
            run_knit(&spec, seeds, chi, trunc_tol, &constraints, &out, seed)
        }
        Command::Sched {
            workload,
            policy,
            classical,
            qpu,
            timeline_dir,
        } => run_sched(
            &workload,
            policy,
            Resources {
                n_classical: classical,
                n_qpu: qpu,
            },
            &timeline_dir,
        ),
        Command::Serve { listen } => {
            let config = match cli.jobs {
                Some(workers) => ServerConfig { workers },
                None => ServerConfig::default(),
            };
            let handle = dispatch::serve(&listen, config)?;
            eprintln!(
                "listening on {} with {} workers",
                handle.local_addr(),
                config.workers
            );
            handle.join();
            eprintln!("queue drained, server stopped");
            Ok(ExitCode::SUCCESS)
        }
        Command::Submit {
            circuit,
            addr,
            observable,
            shots,
            no_wait,
            timeout,
            shutdown,
        } => run_submit(
            circuit.as_deref(),
            &addr,
            observable.as_deref(),
            shots,
            no_wait,
            timeout,
            shutdown,
            seed,
        ),
    }
}

fn run_hhl(
    path: &Path,
    m: Option<usize>,
    tol: f64,
    out: &Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let text = read_input(path)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
    if let Some(m) = m {
        let obj = value
            .as_object_mut()
            .ok_or_else(|| anyhow!("{}: expected a JSON object", path.display()))?;
        obj.insert("m".into(), m.into());
    }
    let sys = hhl::read_system_json(&value.to_string())?;
    let result = hhl::solve(&sys)?;
    eprintln!(
        "hhl: {} system qubits, {} clock qubits, {} total, {} Pauli terms",
        sys.n,
        sys.m,
        sys.total_qubits(),
        result.pauli_terms
    );
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("success probability {:.6e}", result.success_prob);
    eprintln!("deviation {:.6e} (tolerance {tol})", result.deviation);
    emit(out, |w| Ok(hhl::write_run_log(&result, w)?))?;
    if result.deviation < tol {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("deviation exceeds tolerance");
        Ok(ExitCode::FAILURE)
    }
}

#[allow(clippy::too_many_arguments)]
fn run_maxcut(
    path: &Path,
    method: Method,
    p: usize,
    cap: usize,
    shots: usize,
    trials: usize,
    csv: &Option<PathBuf>,
    seed: u64,
) -> anyhow::Result<ExitCode> {
    let graph = Graph::parse_edge_list(&read_input(path)?)
        .with_context(|| format!("{}", path.display()))?;
    let report = match method {
        Method::Qaoa => {
            let res = maxcut::optimize(&graph, p, &OptimizerConfig::default(), seed)?;
            let assignment = maxcut::sample_assignment(&graph, &res.params, shots, seed)?;
            eprintln!("expected cut {:.6}", res.expected_cut);
            MaxcutReport::new("qaoa", &assignment, Some(res.params))
        }
        Method::Qaoa2 => {
            let mut cfg = Qaoa2Config::new(cap, p);
            cfg.shots = shots;
            let res = maxcut::qaoa_squared(&graph, &cfg, seed)?;
            eprintln!(
                "{} communities, unmerged cut {}",
                res.partition.communities.len(),
                res.unmerged_cut
            );
            MaxcutReport::new("qaoa2", &res.assignment, None)
        }
        Method::Greedy => MaxcutReport::new("greedy", &maxcut::baseline_greedy(&graph), None),
        Method::Random => MaxcutReport::new(
            "random",
            &maxcut::baseline_random(&graph, trials, seed),
            None,
        ),
    };
    println!("{}", serde_json::to_string(&report)?);
    if let Some(out) = csv {
        let row = maxcut::BenchRow {
            graph: path_label(path),
            n_nodes: graph.n_nodes(),
            n_edges: graph.edges().len(),
            method: report.method.clone(),
            cut: report.cut,
        };
        let f =
            fs::File::create(out).with_context(|| format!("cannot create {}", out.display()))?;
        maxcut::write_bench_csv(&[row], f)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn path_label(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn run_knit(
    path: &Path,
    seeds: usize,
    chi: Option<usize>,
    trunc_tol: f64,
    constraints: &Constraints,
    out: &Option<PathBuf>,
    seed: u64,
) -> anyhow::Result<ExitCode> {
    let config: SpinChainConfig =
        serde_json::from_str(&read_input(path)?).with_context(|| format!("{}", path.display()))?;
    if seeds == 0 {
        bail!(UsageError("--seeds must be positive".into()));
    }
    let instances: Vec<u64> = if config.disorder.is_some() {
        (0..seeds as u64).map(|k| seed + k).collect()
    } else {
        vec![seed]
    };
    let mps = match chi {
        Some(c) => MpsConfig::new(c, trunc_tol),
        None => MpsConfig::exact(),
    };
    let rows: Vec<anyhow::Result<(EnsembleRow, f64)>> = instances
        .par_iter()
        .map(|&s| {
            let mut cfg = config.clone();
            if let Some(d) = cfg.disorder.as_mut() {
                d.seed = s;
            }
            let circuit = knit::build_spinchain_circuit(&cfg.to_spec()?);
            let profile =
                entropy_profile(&circuit, &knit::default_checkpoints(circuit.len()), mps)?;
            let report = knit::overhead_reduction_with_profile(&circuit, &profile, constraints)?;
            Ok((EnsembleRow::new(s, &report), profile.discarded_weight))
        })
        .collect();
    let mut table = Vec::with_capacity(rows.len());
    for r in rows {
        let (row, discarded) = r?;
        if chi.is_some() && discarded > trunc_tol {
            eprintln!("warning: seed {}: chi too small, discarded weight {discarded:.3e} exceeds {trunc_tol:.1e}", row.seed);
        }
        table.push(row);
    }
    emit(out, |w| Ok(knit::write_ensemble_csv(&table, w)?))?;
    let ratios: Vec<f64> = table.iter().map(|r| r.ratio).collect();
    eprintln!(
        "{} instances, median ratio {:.4}",
        table.len(),
        knit::median(&ratios).unwrap_or(f64::NAN)
    );
    Ok(ExitCode::SUCCESS)
}

fn run_sched(
    path: &Path,
    policy: PolicyArg,
    res: Resources,
    timeline_dir: &Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let jobs = dispatch::parse_workload(&read_input(path)?)
        .with_context(|| format!("{}", path.display()))?;
    let blocks = dispatch::split_workload(&jobs)?;
    let policies: Vec<Policy> = match policy {
        PolicyArg::Monolithic => vec![Policy::Monolithic],
        PolicyArg::Split => vec![Policy::Split],
        PolicyArg::Both => vec![Policy::Monolithic, Policy::Split],
    };
    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "policy,makespan,qpu_busy,qpu_reserved,qpu_reserved_idle,qpu_idle_fraction"
    )?;
    for p in policies {
        let s = dispatch::schedule(&blocks, &res, p)?;
        let name = match p {
            Policy::Monolithic => "monolithic",
            Policy::Split => "split",
        };
        let m = &s.metrics;
        writeln!(
            stdout,
            "{name},{},{},{},{},{:.6}",
            m.makespan, m.qpu_busy, m.qpu_reserved, m.qpu_reserved_idle, m.qpu_idle_fraction
        )?;
        if let Some(dir) = timeline_dir {
            fs::create_dir_all(dir)?;
            let f = fs::File::create(dir.join(format!("{name}.csv")))?;
            s.write_csv(f)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn run_submit(
    circuit: Option<&Path>,
    addr: &str,
    observable: Option<&str>,
    shots: Option<usize>,
    no_wait: bool,
    timeout: u64,
    shutdown: bool,
    seed: u64,
) -> anyhow::Result<ExitCode> {
    if circuit.is_none() && !shutdown {
        bail!(UsageError(
            "a circuit file or --shutdown is required".into()
        ));
    }
    let mut client = Client::connect(addr)?;
    let mut code = ExitCode::SUCCESS;
    if let Some(path) = circuit {
        let qasm = read_input(path)?;
        let observable = match observable {
            Some(s) if s.trim_start().starts_with('[') => serde_json::from_str(s)?,
            Some(p) => serde_json::from_str(&read_input(Path::new(p))?)?,
            None => {
                let width = qstack::qasm::parse(&qasm)
                    .map(|c| c.n_qubits())
                    .unwrap_or(1);
                serde_json::json!([{"coeff": 1.0, "pauli": "Z".repeat(width.max(1))}])
            }
        };
        let mode = match shots {
            Some(shots) => Mode::Shots { shots, seed },
            None => Mode::Exact,
        };
        let id = client.submit(&JobRequest {
            circuit: qasm,
            observable,
            mode,
        })?;
        if no_wait {
            println!("{}", serde_json::json!({"job_id": id}));
        } else {
            let reply = client.wait(id, Duration::from_secs(timeout))?;
            println!("{}", serde_json::to_string(&reply)?);
            if reply.status != Some(JobStatus::Done) {
                code = ExitCode::FAILURE;
            }
        }
    }
    if shutdown {
        client.shutdown()?;
    }
    Ok(code)
}
