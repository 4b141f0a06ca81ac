//! `fluxtrap` command-line front-end.

mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use fluxtrap_core::circuit::{generate, parse_circuit, BenchKind, Circuit, Format};
use fluxtrap_core::scenarios::placed_graph;
use fluxtrap_core::scheduler::{initial_mapping, validate_schedule, CompileError, MappingStrategy, Policy, SchedulerConfig};
use fluxtrap_core::{compile, CompileOutput64, HardwareSpec, PositionGraph, Topology};
use log::info;

#[derive(Parser)]
#[command(name = "fluxtrap", version, about = "SIMD-aware transport compiler for grid QCCD trapped-ion machines")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a hardware description JSON.
    GenArch {
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        trap_capacity: usize,
        #[arg(long)]
        gate_zones: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a benchmark circuit JSON.
    GenBench {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        qubits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compile a circuit, validate the schedule and write schedule and metrics JSON.
    Compile(CompileArgs),
    /// Run a policy x hardware x benchmark matrix and write one CSV row per run.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Qaoa,
    Rca,
    Bv,
    Vqe,
}

impl From<Kind> for BenchKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Qaoa => BenchKind::Qaoa,
            Kind::Rca => BenchKind::Rca,
            Kind::Bv => BenchKind::Bv,
            Kind::Vqe => BenchKind::Vqe,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Fluxtrap,
    EagerJt,
    DepthSync,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Fluxtrap => Policy::FluxTrap,
            PolicyArg::EagerJt => Policy::EagerJt,
            PolicyArg::DepthSync => Policy::DepthSync,
        }
    }
}

#[derive(clap::Args)]
struct CompileArgs {
    /// Hardware description JSON.
    #[arg(long)]
    arch: PathBuf,
    /// Circuit as JSON or OpenQASM 2 subset.
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, value_enum, default_value = "fluxtrap")]
    policy: PolicyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight of the partner-distance term in the routing cost.
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long)]
    out_schedule: PathBuf,
    #[arg(long)]
    out_metrics: PathBuf,
    /// Print a text Gantt chart to stdout.
    #[arg(long)]
    gantt: bool,
    /// Initial placement JSON: array with the slot id of each qubit. Overrides --placement.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Generated initial placement when no --mapping is given.
    #[arg(long, value_enum, default_value = "packed")]
    placement: PlacementArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Packed,
    Random,
}

impl From<PlacementArg> for MappingStrategy {
    fn from(p: PlacementArg) -> Self {
        match p {
            PlacementArg::Packed => MappingStrategy::Packed,
            PlacementArg::Random => MappingStrategy::Random,
        }
    }
}

/// An error with the process exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub err: anyhow::Error,
}

pub const EXIT_INVALID: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DEADLOCK: u8 = 3;

pub fn input_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_INPUT, err: err.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(input_err)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(input_err)
}

pub fn load_arch(path: &Path) -> Result<HardwareSpec, Failure> {
    HardwareSpec::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display())).map_err(input_err)
}

pub fn load_circuit(path: &Path) -> Result<Circuit, Failure> {
    let text = read(path)?;
    let format = if text.trim_start().starts_with('{') { Format::Json } else { Format::QasmSubset };
    parse_circuit(&text, format).with_context(|| format!("parsing {}", path.display())).map_err(input_err)
}

/// Compile and replay-validate; errors carry their exit code.
pub fn run_compile(
    spec: &HardwareSpec,
    circuit: &Circuit,
    graph: &PositionGraph,
    policy: Policy,
    cfg: &SchedulerConfig<f64>,
    seed: u64,
) -> Result<CompileOutput64, Failure> {
    let out = compile(circuit, graph, policy, cfg, seed).map_err(|e| match e {
        CompileError::Input(_) => input_err(e),
        CompileError::Deadlock { .. } => Failure { code: EXIT_DEADLOCK, err: e.into() },
    })?;
    if let Err(violations) = validate_schedule(&out.schedule, circuit, graph) {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure {
            code: EXIT_INVALID,
            err: anyhow!("schedule failed validation ({} on {}):\n{}", policy.name(), spec_label(spec), list.join("\n")),
        });
    }
    Ok(out)
}

fn spec_label(s: &HardwareSpec) -> String {
    format!("{0}x{0}/L={1}/N={2}", s.grid_dim, s.trap_capacity, s.gate_zones_per_trap)
}

pub fn build_graph(spec: &HardwareSpec, n: usize, strategy: MappingStrategy, seed: u64) -> Result<PositionGraph, Failure> {
    let topo = Arc::new(Topology::build(spec).map_err(input_err)?);
    initial_mapping(n, topo, strategy, seed).map_err(input_err)
}

fn cmd_compile(a: &CompileArgs) -> Result<(), Failure> {
    let spec = load_arch(&a.arch)?;
    let circuit = load_circuit(&a.circuit)?;
    let graph = match &a.mapping {
        Some(p) => {
            let placement: Vec<usize> = serde_json::from_str(&read(p)?)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(input_err)?;
            let topo = Arc::new(Topology::build(&spec).map_err(input_err)?);
            placed_graph(topo, &placement).map_err(input_err)?
        }
        None => build_graph(&spec, circuit.n, a.placement.into(), a.seed)?,
    };
    let mut cfg = SchedulerConfig::<f64>::default();
    if !(a.alpha >= 0.0 && a.alpha.is_finite()) {
        return Err(input_err(anyhow!("--alpha must be a non-negative number")));
    }
    cfg.heuristic.alpha = a.alpha;
    let policy = Policy::from(a.policy);
    let out = run_compile(&spec, &circuit, &graph, policy, &cfg, a.seed)?;
    info!(
        "{}: {} events, T_exe {} us, {} cycles, {} junction transfers",
        policy.name(),
        out.schedule.events.len(),
        out.schedule.total_time_us,
        out.stats.cycles,
        out.stats.jt_events
    );
    write(&a.out_schedule, &out.schedule.to_json())?;
    write(&a.out_metrics, &out.metrics.to_json())?;
    if a.gantt {
        print!("{}", out.schedule.gantt(graph.topology(), 100));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::GenArch { grid, trap_capacity, gate_zones, out } => {
            let spec = HardwareSpec::new(grid, trap_capacity, gate_zones);
            spec.validate().map_err(input_err)?;
            write(&out, &spec.to_json())
        }
        Cmd::GenBench { kind, qubits, seed, out } => {
            let c = generate(kind.into(), qubits, seed).map_err(input_err)?;
            write(&out, &c.to_json())
        }
        Cmd::Compile(a) => cmd_compile(&a),
        Cmd::Sweep { config, out } => {
            let cfg = sweep::SweepConfig::from_json(&read(&config)?)
                .with_context(|| format!("parsing {}", config.display()))
                .map_err(input_err)?;
            let mut buf = Vec::new();
            sweep::run(&cfg, &mut buf).map_err(input_err)?;
            write(&out, &String::from_utf8(buf).expect("csv is utf-8"))
        }
    }
}

/// Error chain on one line, skipping causes their parent already quotes.
fn describe(err: &anyhow::Error) -> String {
    let mut out: Vec<String> = Vec::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.last().is_some_and(|prev| prev.contains(&msg)) {
            out.push(msg);
        }
    }
    out.join(": ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLUXTRAP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", describe(&f.err));
            ExitCode::from(f.code)
        }
    }
}
