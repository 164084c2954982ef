//! Command-line front end: simulate data, sample posteriors, query exact
//! oracles, evaluate posterior tables, run experiment grids, and inspect
//! cycle catalogs. Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use edgemc::cycles::{build_cycle_catalog, detect_cycles};
use edgemc::experiment::{run_experiment, ExperimentConfig};
use edgemc::files::{
    fmt_f64, parse_constraints_path, read_candidate_graph_path, read_dag_path,
    read_posterior_path, write_posterior_csv, write_trace_path,
};
use edgemc::graph::{states_to_adjacency, CandidateGraph, Constraints, EdgeState};
use edgemc::metrics::{emse_per_edge, mse1, mse2, mse3, precision_power};
use edgemc::oracle::{exact_posterior, expected_edge_probabilities};
use edgemc::sampler::{posterior_from_trace, run, McmcConfig, Prior};
use edgemc::score::DataMatrix;
use edgemc::topology::{catalog, lookup, simulate_parents};

#[derive(Parser)]
#[command(
    name = "edgemc",
    version,
    about = "Edge-state MCMC over candidate graphs with exact small-graph oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate linear-Gaussian data from a named topology or a DAG file.
    Simulate(SimulateArgs),
    /// Sample the per-edge posterior of a candidate graph from data.
    Infer(InferArgs),
    /// Print equivalence-class expectations, or the exact posterior when
    /// data is supplied.
    Oracle(OracleArgs),
    /// Score a posterior CSV against a topology's expectations.
    Evaluate(EvaluateArgs),
    /// Run a replicate experiment grid from a TOML config file.
    Bench(BenchArgs),
    /// List a skeleton's cycle catalog, or the cycles present in one state.
    Cycles(CyclesArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Catalog topology name (M1, M2, GN4, GN5, multiparent, GN8, GN11,
    /// m1f, m2f, gn4f, gn11f).
    #[arg(long, conflicts_with = "dag")]
    topology: Option<String>,
    /// DAG file: one `U V` arrow per line, 1-based, optional `nodes B` line.
    #[arg(long)]
    dag: Option<PathBuf>,
    /// Number of observations.
    #[arg(long)]
    n: usize,
    /// Signal strength: every edge coefficient.
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    /// Data CSV with one named column per node.
    data: PathBuf,
    /// Candidate-graph edge list (`U V` per line, 1-based).
    #[arg(conflicts_with = "fully_connected")]
    graph: Option<PathBuf>,
    /// Use the fully connected candidate graph over the data columns.
    #[arg(long)]
    fully_connected: bool,
    /// Prior over edge states as `p0,p1,p2`.
    #[arg(long, default_value = "0.05,0.05,0.9", value_parser = parse_prior)]
    prior: PriorSpec,
    #[arg(long, default_value_t = 30_000)]
    iterations: usize,
    /// Fraction of iterations discarded before estimation.
    #[arg(long, default_value_t = 0.2)]
    burn_in: f64,
    /// Thinning interval between retained states.
    #[arg(long, default_value_t = 120)]
    step_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Constraint file: `U V forbid parent` lines.
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Also write the retained chain states to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, conflicts_with = "dag")]
    topology: Option<String>,
    /// DAG file giving the true graph.
    #[arg(long)]
    dag: Option<PathBuf>,
    /// With data, print the exact enumerated posterior instead of class
    /// expectations.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "0.05,0.05,0.9", value_parser = parse_prior)]
    prior: PriorSpec,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Posterior CSV produced by `infer` or `oracle`.
    #[arg(long)]
    posterior: PathBuf,
    /// Topology supplying the ground truth.
    #[arg(long)]
    topology: String,
    /// Presence cutoff on P0 + P1 for precision and power.
    #[arg(long, default_value_t = 0.5)]
    cutoff: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment TOML config.
    #[arg(long)]
    config: PathBuf,
    /// Report CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: EDGEMC_JOBS or the available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct CyclesArgs {
    #[arg(long, conflicts_with_all = ["dag", "edges"])]
    topology: Option<String>,
    #[arg(long, conflicts_with = "edges")]
    dag: Option<PathBuf>,
    /// Candidate-graph edge list file.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Edge-state digit string (0 forward, 1 reverse, 2 absent); prints the
    /// directed cycles present in this state instead of the catalog.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct PriorSpec([f64; 3]);

fn parse_prior(s: &str) -> Result<PriorSpec, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected p0,p1,p2, got {s:?}"));
    }
    let mut p = [0.0; 3];
    for (k, part) in parts.iter().enumerate() {
        p[k] = part
            .trim()
            .parse()
            .map_err(|_| format!("{part:?} is not a number"))?;
    }
    Ok(PriorSpec(p))
}

enum CliError {
    Usage(String),
    Runtime(edgemc::Error),
}

impl From<edgemc::Error> for CliError {
    fn from(e: edgemc::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err}");
            std::process::exit(2);
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Cycles(args) => cmd_cycles(args),
    }
}

/// Writes to `--out` when given, stdout otherwise.
fn with_output(
    out: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> edgemc::Result<()>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(edgemc::Error::from)?;
            f(&mut file)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
        }
    }
    Ok(())
}

fn lookup_topology(name: &str) -> Result<&'static edgemc::topology::Topology, CliError> {
    lookup(name).ok_or_else(|| {
        let names: Vec<&str> = catalog().iter().map(|t| t.name()).collect();
        usage(format!(
            "unknown topology {name:?}; available: {}",
            names.join(", ")
        ))
    })
}

fn build_prior(spec: PriorSpec) -> Result<Prior, CliError> {
    Prior::new(spec.0[0], spec.0[1], spec.0[2])
        .map_err(|e| usage(format!("invalid --prior: {e}")))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let data = match (&args.topology, &args.dag) {
        (Some(name), None) => {
            let topo = lookup_topology(name)?;
            topo.simulate(args.n, args.beta, args.seed)?
        }
        (None, Some(path)) => {
            let (nodes, arcs) = read_dag_path(path)?;
            let mut parents = vec![Vec::new(); nodes];
            for &(p, c) in &arcs {
                parents[c].push(p);
            }
            simulate_parents(&parents, args.n, args.beta, args.seed)?
        }
        _ => return Err(usage("exactly one of --topology or --dag is required")),
    };
    with_output(args.out.as_deref(), |w| data.write_csv(w))
}

fn cmd_infer(args: InferArgs) -> Result<(), CliError> {
    let data = DataMatrix::from_csv_path(&args.data)?;
    let g = match (&args.graph, args.fully_connected) {
        (Some(path), false) => {
            let g = read_candidate_graph_path(path)?;
            if g.node_count() != data.n_cols() {
                return Err(CliError::Runtime(edgemc::Error::InvalidGraph(format!(
                    "graph file covers {} nodes but the data has {} columns",
                    g.node_count(),
                    data.n_cols()
                ))));
            }
            g
        }
        (None, true) => CandidateGraph::fully_connected(data.n_cols())?,
        _ => return Err(usage("provide a graph file or --fully-connected")),
    };
    let prior = build_prior(args.prior)?;
    let constraints = match &args.constraints {
        Some(path) => parse_constraints_path(path, &g)?,
        None => Constraints::none(g.edge_count()),
    };
    let config = McmcConfig {
        iterations: args.iterations,
        burn_in_fraction: args.burn_in,
        step_size: args.step_size,
        seed: args.seed,
    };
    let trace = run(&data, &g, &prior, &config, &constraints)?;
    let posterior = posterior_from_trace(&trace, &g)?;
    if let Some(path) = &args.trace {
        write_trace_path(&trace, path)?;
    }
    with_output(args.out.as_deref(), |w| write_posterior_csv(&posterior, w))
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let table = match (&args.topology, &args.dag) {
        (Some(name), None) => {
            let topo = lookup_topology(name)?;
            match &args.data {
                None => {
                    let expected = topo.expected_probabilities()?;
                    edgemc::sampler::PosteriorTable::from_rows(
                        expected.edges().to_vec(),
                        expected.rows().to_vec(),
                    )?
                }
                Some(path) => {
                    let data = DataMatrix::from_csv_path(path)?;
                    let g = topo.candidate_graph()?;
                    let prior = build_prior(args.prior)?;
                    exact_posterior(&data, &g, &prior, &Constraints::none(g.edge_count()))?
                }
            }
        }
        (None, Some(path)) => {
            let (nodes, arcs) = read_dag_path(path)?;
            let pairs: Vec<(usize, usize)> = arcs.clone();
            let g = CandidateGraph::new(nodes, &pairs)?;
            match &args.data {
                None => {
                    let mut s = vec![EdgeState::Absent; g.edge_count()];
                    for &(p, c) in &arcs {
                        let e = g.edge_index(p, c).expect("arc is a candidate edge");
                        s[e] = if p < c {
                            EdgeState::Forward
                        } else {
                            EdgeState::Reverse
                        };
                    }
                    let expected = expected_edge_probabilities(&s, &g)?;
                    edgemc::sampler::PosteriorTable::from_rows(
                        expected.edges().to_vec(),
                        expected.rows().to_vec(),
                    )?
                }
                Some(data_path) => {
                    let data = DataMatrix::from_csv_path(data_path)?;
                    let prior = build_prior(args.prior)?;
                    exact_posterior(&data, &g, &prior, &Constraints::none(g.edge_count()))?
                }
            }
        }
        _ => return Err(usage("exactly one of --topology or --dag is required")),
    };
    with_output(args.out.as_deref(), |w| write_posterior_csv(&table, w))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    if !(args.cutoff > 0.0 && args.cutoff < 1.0) {
        return Err(usage(format!(
            "--cutoff must lie in (0, 1), got {}",
            args.cutoff
        )));
    }
    let topo = lookup_topology(&args.topology)?;
    let posterior = read_posterior_path(&args.posterior)?;
    let pairs: Vec<(usize, usize)> = posterior.edges().iter().map(|e| (e.lo, e.hi)).collect();
    let g = CandidateGraph::new(topo.node_count(), &pairs)?;
    for &(p, c) in topo.true_edges() {
        if g.edge_index(p, c).is_none() {
            return Err(CliError::Runtime(edgemc::Error::InvalidData(format!(
                "posterior is missing the candidate edge ({}, {})",
                p + 1,
                c + 1
            ))));
        }
    }
    let expected = topo.expected_probabilities_on(&g)?;
    let per_edge = emse_per_edge(&expected, &posterior)?;
    let summary = [
        mse1(&expected, &posterior)?,
        mse2(&expected, &posterior)?,
        mse3(&expected, &posterior, topo.node_count())?,
    ];
    let (precision, power) =
        precision_power(&posterior, &topo.true_edge_flags(&g), args.cutoff)?;
    with_output(args.out.as_deref(), |w| {
        writeln!(w, "edge_lo,edge_hi,emse")?;
        for (edge, v) in g.edges().iter().zip(&per_edge) {
            writeln!(w, "{},{},{}", edge.lo + 1, edge.hi + 1, fmt_f64(*v))?;
        }
        writeln!(w)?;
        writeln!(w, "mse1,mse2,mse3,precision,power")?;
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(summary[0]),
            fmt_f64(summary[1]),
            fmt_f64(summary[2]),
            fmt_f64(precision),
            fmt_f64(power)
        )?;
        Ok(())
    })
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::from_path(&args.config)?;
    let jobs = match args.jobs {
        Some(j) if j >= 1 => j,
        Some(_) => return Err(usage("--jobs must be at least 1")),
        None => match std::env::var("EDGEMC_JOBS") {
            Ok(v) => v
                .parse::<usize>()
                .ok()
                .filter(|&j| j >= 1)
                .ok_or_else(|| usage(format!("EDGEMC_JOBS={v:?} is not a positive integer")))?,
            Err(_) => std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1),
        },
    };
    let report = run_experiment(&config, jobs)?;
    let file = std::fs::File::create(&args.out).map_err(edgemc::Error::from)?;
    report.write_csv(file)?;
    Ok(())
}

fn cmd_cycles(args: CyclesArgs) -> Result<(), CliError> {
    let g = match (&args.topology, &args.dag, &args.edges) {
        (Some(name), None, None) => lookup_topology(name)?.candidate_graph()?,
        (None, Some(path), None) => {
            let (nodes, arcs) = read_dag_path(path)?;
            CandidateGraph::new(nodes, &arcs)?
        }
        (None, None, Some(path)) => read_candidate_graph_path(path)?,
        _ => return Err(usage("exactly one of --topology, --dag, or --edges is required")),
    };
    let catalog = build_cycle_catalog(&g)?;
    let row = |w: &mut dyn Write, edges: &[usize], states: &[EdgeState], decimal: &dyn Display| {
        let idx: Vec<String> = edges.iter().map(|&e| (e + 1).to_string()).collect();
        let digits: String = states
            .iter()
            .map(|st| char::from(b'0' + st.index() as u8))
            .collect();
        writeln!(w, "{}\t{}\t{}\t{}", idx.join(";"), digits, edges.len(), decimal)
            .map_err(edgemc::Error::from)
    };
    match &args.state {
        Some(digits) => {
            let trimmed = digits.trim();
            if trimmed.len() != g.edge_count() {
                return Err(usage(format!(
                    "--state needs {} digits, got {}",
                    g.edge_count(),
                    trimmed.len()
                )));
            }
            let mut s = Vec::with_capacity(g.edge_count());
            for ch in trimmed.chars() {
                let st = match ch {
                    '0' => EdgeState::Forward,
                    '1' => EdgeState::Reverse,
                    '2' => EdgeState::Absent,
                    _ => return Err(usage(format!("--state digit {ch:?} is not 0, 1, or 2"))),
                };
                s.push(st);
            }
            let cycles = detect_cycles(&s, &catalog)?;
            debug_assert_eq!(
                cycles.is_empty(),
                states_to_adjacency(&g, &s)?.is_acyclic()
            );
            with_output(args.out.as_deref(), |w| {
                writeln!(w, "edges\tstates\tlength\tdecimal")?;
                for cycle in &cycles {
                    row(w, &cycle.edge_indices, &cycle.edge_states, &cycle.decimal)?;
                }
                Ok(())
            })
        }
        None => with_output(args.out.as_deref(), |w| {
            if catalog.is_fallback() {
                writeln!(
                    w,
                    "catalog fallback: signatures not precomputed \
                     (cycle count above cap or signature collision); \
                     use --state to list the cycles of one orientation"
                )?;
                return Ok(());
            }
            writeln!(w, "edges\tstates\tlength\tdecimal")?;
            for entry in catalog.entries() {
                for (states, decimal) in &entry.orientations {
                    row(w, &entry.edge_indices, states, decimal)?;
                }
            }
            Ok(())
        }),
    }
}
