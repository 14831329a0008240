//! `fockcut`: identity checks, single evolutions and convergence studies
//! for occupation-number cutoffs.
//!
//! Exit status 0 when every check passes, 1 when a check fails, 2 for a
//! configuration error.

mod commands;
mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use commands::Report;
use config::{Format, ModelName, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fockcut::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use fockcut::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Range { .. } | E::InvalidParameter(_) | E::InvalidTruncation(_) | E::UnknownSite(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "fockcut", version, about = "Occupation-number cutoffs: identities, evolutions, convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the ladder and projection identities.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Evolve one observable over the time and cutoff grid.
    Evolve {
        #[command(flatten)]
        common: Common,
    },
    /// Measure Cauchy gaps and tails against their bounds.
    Study {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model with default parameters, when no config file is given.
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self, fallback: Option<ModelName>, study: bool) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, self.model.or(fallback)) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(m)) => RunConfig::new(m.spec()),
            (None, None) => return Err(CliError::Config("no model: pass --config or --model".into())),
        };
        if let (Some(_), Some(m)) = (&self.config, self.model) {
            cfg.model = m.spec();
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(format) = self.format {
            cfg.format = format;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if study {
            cfg.validate_study()?;
        } else {
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fockcut: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, fallback, study) = match &cli.command {
        Command::Verify { common, .. } => (common, Some(ModelName::Free), false),
        Command::Evolve { common } => (common, None, false),
        Command::Study { common } => (common, None, true),
    };
    let cfg = common.resolve(fallback, study)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Verify { inject_fault, .. } => {
            let report = commands::verify(&cfg, *inject_fault)?;
            for row in report.rows.iter().filter(|r| !r.passed) {
                eprintln!(
                    "identity {} ({}) failed: deviation {:e} at index {}",
                    row.check,
                    row.formula,
                    row.measured,
                    row.worst_index.map_or("-".into(), |i| i.to_string())
                );
            }
            emit(&report, &cfg, false)
        }
        Command::Evolve { .. } => {
            let report = commands::evolve(&cfg)?;
            for row in report.rows.iter().filter(|r| !r.passed) {
                match &row.error {
                    Some(e) => eprintln!("evolve L={} t={}: {e}", row.cutoff, row.t),
                    None => eprintln!("evolve L={} t={}: residual {:e} above {:e}", row.cutoff, row.t, row.residual, row.tolerance),
                }
            }
            emit(&report, &cfg, false)
        }
        Command::Study { .. } => {
            let report = commands::study(&cfg)?;
            let failed: Vec<_> = report.rows.iter().filter(|r| !r.satisfied).collect();
            eprintln!("study {}: {} rows, {} failed", report.model, report.rows.len(), failed.len());
            for row in failed {
                eprintln!("  {} t={} k={}: measured {:e}, bound {:?}{}", row.check, row.t, row.k, row.measured, row.bound,
                    row.error.as_ref().map_or(String::new(), |e| format!(" ({e})")));
            }
            emit(&report, &cfg, true)
        }
    })
}

/// Writes the report in the configured format, to `out` or stdout. With
/// `both`, the other format goes next to `out` as well.
fn emit<R: Serialize>(report: &Report<R>, cfg: &RunConfig, both: bool) -> Result<bool, CliError> {
    match &cfg.out {
        None => write_report(report, cfg.format, io::stdout().lock())?,
        Some(path) => {
            write_report(report, cfg.format, File::create(path)?)?;
            if both {
                let other = cfg.format.other();
                write_report(report, other, File::create(companion(path, other))?)?;
            }
        }
    }
    Ok(report.passed)
}

fn companion(path: &Path, format: Format) -> PathBuf {
    let swapped = path.with_extension(format.extension());
    if swapped != path {
        return swapped;
    }
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(format.extension());
    PathBuf::from(name)
}

fn write_report<R: Serialize, W: Write>(report: &Report<R>, format: Format, mut w: W) -> Result<(), CliError> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, report)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for row in &report.rows {
                csv.serialize(row)?;
            }
            csv.flush()?;
        }
    }
    Ok(())
}
