//! Experiment runner behind the `uowsn` binary.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;
use uowsn_core::experiments::{run_bound_sweep, run_sweep, scene_snapshot};
use uowsn_core::oracle;

use crate::config::{parse_config, ConfigDocument, ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "uowsn",
    version,
    about = "CRLB and least-squares localization experiments for underwater optical networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config; paper defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write crlb.csv: known-anchor and APU bounds per sweep value.
    Crlb,
    /// Write sweep.csv: Monte Carlo RMSE of every estimator against the bounds.
    Sweep,
    /// Write scene.csv: one scenario with both estimates.
    Scene,
    /// Run the numerical oracles and print a report.
    Validate,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid --threads: {0}")]
    Threads(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] uowsn_core::Error),
    #[error("{0} oracle check(s) failed")]
    ValidationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ValidationFailed(_) => 1,
            CliError::Config(_) | CliError::ReadConfig { .. } | CliError::Write { .. } | CliError::Threads(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let cfg = match path {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|source| CliError::ReadConfig { path: p.to_path_buf(), source })?;
            parse_config(&text)?
        }
        None => RunConfig::from_document(ConfigDocument::default())?,
    };
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(&path, contents))
        .map_err(|source| CliError::Write { path: path.clone(), source })?;
    Ok(path)
}

/// Runs one command; on success returns the file written, if any.
pub fn execute(cli: &Cli) -> Result<Option<PathBuf>, CliError> {
    if cli.command == Command::Validate {
        let checks = oracle::run_all();
        for c in &checks {
            println!("{c}");
        }
        let failed = checks.iter().filter(|c| c.is_failure()).count();
        return if failed == 0 { Ok(None) } else { Err(CliError::ValidationFailed(failed)) };
    }
    let cfg = load_config(cli.config.as_deref(), cli.seed)?;
    let (name, contents) = match cli.command {
        Command::Crlb => ("crlb.csv", output::crlb_csv(&cfg, &run_bound_sweep(&cfg.spec)?)),
        Command::Sweep => ("sweep.csv", output::sweep_csv(&cfg, &run_sweep(&cfg.spec)?)),
        Command::Scene => {
            let scene = scene_snapshot(
                cfg.document.num_anchors,
                &cfg.spec.region,
                cfg.noise(),
                cfg.channel(),
                cfg.document.seed,
            )?;
            ("scene.csv", output::scene_csv(&cfg, &scene))
        }
        Command::Validate => unreachable!(),
    };
    write_file(&cli.out, name, &contents).map(Some)
}

/// Runs `cli` on a pool of the requested size and maps the outcome
/// to a process exit code.
pub fn run(cli: Cli) -> ExitCode {
    let outcome = match cli.threads {
        Some(0) => Err(CliError::Threads("must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Threads(e.to_string()))
            .and_then(|pool| pool.install(|| execute(&cli))),
        None => execute(&cli),
    };
    match outcome {
        Ok(Some(path)) => {
            eprintln!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
