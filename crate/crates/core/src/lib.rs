//! Compiler and discrete-event scheduler for grid-of-junctions trapped-ion (QCCD) machines.
//!
//! Costs and fidelities are generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`. Times are integer microseconds throughout.

pub mod aggregation;
pub mod arch;
pub mod circuit;
pub mod heuristic;
pub mod isa;
pub mod metrics;
pub mod scalar;
pub mod scenarios;
pub mod scheduler;

pub use arch::{build_grid, HardwareSpec, PositionGraph, QubitMapping, Topology};
pub use circuit::{Circuit, DependencyDag, Op};
pub use isa::{enumerate_jt_classes, Instruction, JTClass, OpTable};
pub use metrics::{Counts, Fidelity, Metrics, TimeBreakdown};
pub use scalar::Scalar;
pub use scheduler::{compile, initial_mapping, validate_schedule, CompileError, MappingStrategy, Policy, Schedule};

pub type Cost = f64;
pub type Metrics64 = metrics::Metrics<f64>;
pub type HeuristicConfig64 = heuristic::HeuristicConfig<f64>;
pub type SchedulerConfig64 = scheduler::SchedulerConfig<f64>;
pub type CompileOutput64 = scheduler::CompileOutput<f64>;
