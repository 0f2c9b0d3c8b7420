//! `heatmom` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use heatmom::{SolveStatus, TruncationDegrees};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] heatmom::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("solver finished with status {0}")]
    NonOptimal(SolveStatus),
}

impl CliError {
    fn config(e: impl std::fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        use heatmom::Error as E;
        match self {
            Self::NonOptimal(_) => 1,
            Self::Core(E::Numerical(_) | E::NonFinite { .. }) => 1,
            Self::Io { .. } => 1,
            Self::Config(_) | Self::Core(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "heatmom", version, about = "Moment relaxations of heat equations on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the configuration.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Oracle {
    Analytic,
    Galerkin,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moment vector and matrix sizes, as CSV on stdout.
    Sizes {
        /// Degrees as `dt,da,dh`; the standard twelve rows when omitted.
        degrees: Vec<TruncationDegrees>,
    },
    /// Solve the relaxation; writes pseudomoments.csv and report.json.
    Solve {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Accuracy histogram of occupation pseudo-moments; writes histogram.csv.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// `analytic` (linear flow), `galerkin`, or a moment CSV.
        #[arg(short, long, default_value = "analytic")]
        reference: String,
        /// Pseudo-moment CSV to score instead of solving.
        #[arg(short, long)]
        estimate: Option<PathBuf>,
    },
    /// Dump oracle moment tables; writes oracle_<which>.csv.
    Oracle {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long, value_enum)]
        which: Oracle,
    },
    /// Write the relaxation as an SDPA sparse file.
    ExportSdpa {
        #[command(flatten)]
        config: ConfigArgs,
        /// Defaults to `<output_dir>/problem.dat-s`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Read an external solution vector; writes pseudomoments.csv and check.json.
    ImportSolution {
        #[command(flatten)]
        config: ConfigArgs,
        /// One value per line, in variable order.
        solution: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sizes { degrees } => commands::sizes(&degrees, std::io::stdout().lock()),
        Command::Solve { config } => commands::solve(&config.load()?),
        Command::Compare {
            config,
            reference,
            estimate,
        } => commands::compare(&config.load()?, &reference, estimate.as_deref()),
        Command::Oracle { config, which } => {
            commands::oracle(&config.load()?, matches!(which, Oracle::Analytic))
        }
        Command::ExportSdpa { config, output } => commands::export_sdpa(&config.load()?, output),
        Command::ImportSolution { config, solution } => {
            commands::import_solution(&config.load()?, &solution)
        }
    }
}

impl ConfigArgs {
    fn load(&self) -> Result<config::Run, CliError> {
        let cfg = match &self.config {
            Some(path) => config::RunConfig::load(path)?,
            None => config::RunConfig::default(),
        };
        let mut run = cfg.validate()?;
        if let Some(dir) = &self.output_dir {
            run.output_dir = dir.clone();
        }
        Ok(run)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heatmom: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
