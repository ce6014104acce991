//! Benchmark harness: builds a test problem, runs one shift strategy over a
//! stream of seeded initial states and records per-vector cost.
//!
//! Row 0 of every run is the setup stage (the single factorization for the
//! fixed shift, the Brent search for optimize-and-run, nothing for the
//! incremental method). Rows `1..=M` are the processed vectors.

pub mod config;
pub mod crossover;
pub mod csv;
pub mod run;

pub use config::{ProblemConfig, RunConfig, StatesKind, Strategy};
pub use crossover::{crossover_report, CrossoverReport};
pub use csv::{emit_csv, parse_csv, write_csv, CSV_HEADER};
pub use run::{run_benchmark, BenchRecord, BenchRun, Summary};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(#[from] sai_core::Error),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("runs are not comparable: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// Process exit code: 2 for solver failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Solver(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
