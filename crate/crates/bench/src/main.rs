use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sai_bench::{crossover_report, emit_csv, parse_csv, run_benchmark, write_csv, BenchError, RunConfig};

#[derive(Parser)]
#[command(name = "sai-bench", version, about = "Shift-and-invert Krylov exp(-tA)v benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one strategy and write per-vector telemetry as CSV.
    Run {
        /// Flat `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--override strategy=incremental`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write the assembled matrix in Matrix Market format.
        #[arg(long, value_name = "PATH")]
        export_matrix: Option<PathBuf>,
    },
    /// Report where an adaptive run's cumulative cost drops below a fixed-shift run.
    Crossover { fixed: PathBuf, adaptive: PathBuf },
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            export_matrix,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = RunConfig::from_text_with_overrides(&text, &overrides)?;
            if export_matrix.is_some() {
                cfg.export_matrix = export_matrix;
            }
            let run = run_benchmark(&cfg)?;
            match &cfg.output {
                Some(path) => emit_csv(&run.records, &run.summary, path)?,
                None => write_csv(std::io::stdout().lock(), &run.records, Some(&run.summary))?,
            }
            let s = &run.summary;
            eprintln!(
                "{}: {} vectors, mean {:.2} Arnoldi iterations, {} LU, {:.3} s",
                s.strategy.name(),
                s.num_vectors,
                s.mean_arnoldi_iters,
                s.total_lu,
                s.total_time_s
            );
            if !s.unconverged.is_empty() {
                eprintln!("warning: {} vectors did not reach tol", s.unconverged.len());
            }
            Ok(())
        }
        Command::Crossover { fixed, adaptive } => {
            let load = |p: &PathBuf| -> Result<_, BenchError> { parse_csv(&std::fs::read_to_string(p)?) };
            let report = crossover_report(&load(&fixed)?, &load(&adaptive)?)?;
            print!("{}", report.render());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
