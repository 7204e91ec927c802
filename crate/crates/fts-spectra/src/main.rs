//! Command-line driver for spectral-domain experiments on function-valued
//! time series.
//!
//! `run` executes the experiment described by a TOML config and writes a
//! JSONL report (stdout or `--out`), with one human-readable line per
//! pass/fail check on stderr. `spectrum` writes a spectral density table as
//! CSV. `validate` checks a config and reports every problem at once.
//!
//! Exit codes: 0 all checks passed, 1 threshold failures, 2 configuration or
//! runtime errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fts_core::report::{write_records, write_spectrum_table};

mod config;
mod runner;

#[derive(Parser)]
#[command(
    name = "fts-spectra",
    version,
    about = "Spectral-domain experiments for function-valued time series"
)]
struct Cli {
    /// Override the seed given in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of worker threads (default: all cores). Reports are
    /// byte-identical for any choice.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report or table to this file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write a JSONL report.
    Run { config: PathBuf },
    /// Write the configured spectral density table (CSV).
    Spectrum { config: PathBuf },
    /// Check a config file; prints every problem, or `configuration OK`.
    Validate { config: PathBuf },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<config::Config, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = config::parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            return fail(format!("--threads {t}: {e}"));
        }
    }

    let path = match &cli.command {
        Command::Run { config } | Command::Spectrum { config } | Command::Validate { config } => {
            config.clone()
        }
    };
    let cfg = match load_config(&path, cli.seed) {
        Ok(cfg) => cfg,
        Err(e) => return fail(e),
    };
    let problems = config::validate(&cfg);
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("error: {p}");
        }
        return ExitCode::from(2);
    }

    match cli.command {
        Command::Validate { .. } => {
            println!("configuration OK");
            ExitCode::SUCCESS
        }
        Command::Run { .. } => {
            let out = match runner::run(&cfg) {
                Ok(out) => out,
                Err(e) => return fail(e),
            };
            match &cli.out {
                Some(file) => {
                    if let Err(e) = write_records(file, &out.records) {
                        return fail(e);
                    }
                }
                None => print!("{}", out.jsonl()),
            }
            eprint!("{}", out.human_summary());
            if out.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Spectrum { .. } => {
            let est = match runner::run_spectrum(&cfg) {
                Ok(est) => est,
                Err(e) => return fail(e),
            };
            match &cli.out {
                Some(file) => {
                    if let Err(e) = write_spectrum_table(file, &est) {
                        return fail(e);
                    }
                }
                None => print!("{}", fts_core::report::spectrum_table_string(&est)),
            }
            eprintln!("spectrum: {} frequencies, dimension {}", est.len(), est.dim());
            ExitCode::SUCCESS
        }
    }
}
