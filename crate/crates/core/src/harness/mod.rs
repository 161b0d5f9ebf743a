//! Seeded experiment orchestration and CSV output.
//!
//! A run fixes the physical topology from the base seed and executes
//! `repetitions` independent simulations; repetition `r` draws traffic,
//! noise and initial attractors from seed `base + r`.

mod config;
mod records;
mod run;

pub use config::{ControllerSpec, ExperimentConfig, TopologySpec, TrafficSpec};
pub use records::{fmt_real, quantize, quantize_record, read_rounds, write_rounds, ROUND_HEADER};
pub use run::{
    build_topology, derive_seed, read_summary_table, run, simulate, sweep, MuStats, RunOutcome,
    RunSummary, Simulation, SweepParam, SweepRow, MU_BIN_WIDTH, MU_SAMPLE_LIMIT, SUMMARY_HEADER,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::graph::GraphError;
use crate::netstate::NetError;
use crate::traffic::TrafficError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("topology: {0}")]
    Graph(#[from] GraphError),
    #[error("traffic: {0}")]
    Traffic(#[from] TrafficError),
    #[error("network state: {0}")]
    Net(#[from] NetError),
}
