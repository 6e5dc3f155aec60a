//! `nph` — two-arm survival trial simulation and analysis under
//! non-proportional hazards.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{cmd_analyze, cmd_reproduce, cmd_selftest, cmd_simulate, AnalyzeOptions, CliError};
use nph_core::harness::TStarRule;
use nph_core::simgen::AnalysisMode;

#[derive(Parser)]
#[command(
    name = "nph",
    version,
    about = "Survival trial simulation and analysis under non-proportional hazards",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for simulation (defaults to all cores; results are
    /// identical for any worker count)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Directory for generated files
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a dataset CSV (header `time,event,arm`)
    Analyze {
        dataset: PathBuf,
        /// Comma-separated tests: logrank, fh(rho,gamma), rmst_diff
        #[arg(long, default_value = "logrank,fh(0,1),fh(1,1),fh(1,0),rmst_diff")]
        tests: String,
        /// Comma-separated estimators: hr, whr(rho,gamma), rmst_diff, rmst_ratio
        #[arg(
            long,
            default_value = "hr,whr(0,1),whr(1,1),whr(1,0),rmst_diff,rmst_ratio"
        )]
        estimators: String,
        /// minimax-observed | minimax-event | fixed:X
        #[arg(long, default_value = "minimax-observed")]
        tstar_rule: String,
        /// One-sided significance level
        #[arg(long, default_value_t = 0.025)]
        alpha: f64,
    },
    /// Run a simulation grid described by a TOML config file
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,
        /// Override the design's analysis cutoff: event | calendar
        #[arg(long)]
        analysis_mode: Option<String>,
    },
    /// Recompute a reference grid (releff, fig1, fig3, fig5, fig6, fig7,
    /// fig8, fig10, table1, table2, table3) and write it as CSV
    Reproduce {
        target: String,
        #[arg(long, default_value_t = 20250810)]
        seed: u64,
        /// Simulated trials per cell
        #[arg(long, default_value_t = 10_000)]
        sims: u32,
    },
    /// Verify reference defaults and fast numeric invariants
    Selftest,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {workers} workers: {e}")))?;
    }

    match cli.command {
        Command::Analyze {
            dataset,
            tests,
            estimators,
            tstar_rule,
            alpha,
        } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(CliError::Config(format!(
                    "--alpha must be in (0, 1), got {alpha}"
                )));
            }
            let options = AnalyzeOptions {
                tests: commands::parse_test_list(&tests)?,
                estimators: commands::parse_estimator_list(&estimators)?,
                tstar_rule: tstar_rule
                    .parse::<TStarRule>()
                    .map_err(|e| CliError::Config(e.to_string()))?,
                alpha,
            };
            cmd_analyze(&dataset, &options, &cli.out)
        }
        Command::Simulate {
            config,
            seed,
            analysis_mode,
        } => {
            let mode = match analysis_mode.as_deref() {
                None => None,
                Some("event") | Some("event-driven") => Some(AnalysisMode::Event),
                Some("calendar") => Some(AnalysisMode::Calendar),
                Some(other) => {
                    return Err(CliError::Config(format!(
                        "--analysis-mode must be 'event' or 'calendar', got '{other}'"
                    )))
                }
            };
            cmd_simulate(&config, seed, mode, &cli.out)
        }
        Command::Reproduce { target, seed, sims } => cmd_reproduce(&target, seed, sims, &cli.out),
        Command::Selftest => cmd_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
