//! Cross-product runs written as CSV.

use std::io::Write;

use fluxtrap_core::circuit::{generate, BenchKind};
use fluxtrap_core::scheduler::{MappingStrategy, Policy, SchedulerConfig};
use fluxtrap_core::{HardwareSpec, Metrics64};
use serde::Deserialize;

use crate::{build_graph, run_compile, EXIT_DEADLOCK, EXIT_INPUT, EXIT_INVALID};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bench {
    pub kind: BenchKind,
    pub qubits: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Rows are emitted for each hardware entry, then each benchmark, then each policy, in file order.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub specs: Vec<HardwareSpec>,
    #[serde(default)]
    pub benchmarks: Vec<Bench>,
    /// Placement seed.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mapping: MappingStrategy,
    #[serde(default)]
    pub scheduler: Option<SchedulerConfig<f64>>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        for s in &cfg.specs {
            s.validate()?;
        }
        Ok(cfg)
    }
}

const KEY_COLUMNS: [&str; 8] = ["grid", "trap_capacity", "gate_zones", "benchmark", "qubits", "bench_seed", "policy", "status"];

pub fn run(cfg: &SweepConfig, out: impl Write) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(KEY_COLUMNS.iter().chain(Metrics64::CSV_COLUMNS.iter()))?;
    let sched = cfg.scheduler.unwrap_or_default();
    for spec in &cfg.specs {
        for b in &cfg.benchmarks {
            let circuit = generate(b.kind, b.qubits, b.seed)?;
            for &policy in &cfg.policies {
                let mut row = vec![
                    spec.grid_dim.to_string(),
                    spec.trap_capacity.to_string(),
                    spec.gate_zones_per_trap.to_string(),
                    b.kind.name().to_string(),
                    b.qubits.to_string(),
                    b.seed.to_string(),
                    policy.name().to_string(),
                ];
                let result = build_graph(spec, circuit.n, cfg.mapping, cfg.seed)
                    .and_then(|g| run_compile(spec, &circuit, &g, policy, &sched, cfg.seed));
                match result {
                    Ok(o) => {
                        row.push("ok".into());
                        row.extend(o.metrics.csv_row());
                    }
                    Err(f) => {
                        log::warn!("{} {} on {:?}: {:#}", policy.name(), b.kind.name(), spec, f.err);
                        row.push(
                            match f.code {
                                EXIT_INVALID => "invalid",
                                EXIT_INPUT => "input-error",
                                EXIT_DEADLOCK => "deadlock",
                                _ => "error",
                            }
                            .into(),
                        );
                        row.extend(std::iter::repeat_n(String::new(), Metrics64::CSV_COLUMNS.len()));
                    }
                }
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
