//! `wgmps`: runs waveguide scattering experiments from TOML configurations.
//!
//! Exit codes: 0 success, 1 numerical or convergence failure, 2 configuration
//! or input error, 3 resource abort. A `manifest.json` is written to the
//! output directory in every case.

mod commands;
mod compare;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use waveguide_mps::Error;

#[derive(Parser)]
#[command(
    name = "wgmps",
    version,
    about = "Few-photon waveguide scattering with matrix product states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    pub config: PathBuf,
    /// Output directory; overrides `output` in the configuration.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set engine.max_bond=32`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Imaginary-time ground state of the configured model.
    GroundState {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the ground state as `state.mps`.
        #[arg(long)]
        checkpoint: bool,
    },
    /// One scattering experiment.
    Scatter {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the final state as `state.mps`.
        #[arg(long)]
        checkpoint: bool,
    },
    /// Every point of the `[sweep]` table, one subdirectory each.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Exact reference for linear or single-excitation configurations, in
    /// the same file layout as `scatter`.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compares the CSV outputs of two runs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long, default_value = "out/compare")]
        out: PathBuf,
        /// Absolute tolerance applied to every numeric column.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Per-column tolerance, e.g. `--column-tol reflection=1e-3`.
        #[arg(long = "column-tol", value_name = "COLUMN=TOL")]
        column_tol: Vec<String>,
        /// Fail when a row exists in one directory only.
        #[arg(long)]
        all_rows: bool,
    },
    /// Runs a bundled figure configuration (`list` prints them).
    Figures {
        id: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

/// An error with its exit code.
#[derive(Debug, Clone)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: msg.into(),
        }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: msg.into(),
        }
    }

    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    pub fn kind(&self) -> &'static str {
        match self.code {
            2 => "config",
            3 => "resource",
            _ => "numeric",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Argument(_) | Error::Io(_) | Error::Checkpoint(_) => 2,
            Error::Resource(_) | Error::Unsupported(_) => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::GroundState { run, checkpoint } => commands::ground_state(&run, checkpoint),
        Command::Scatter { run, checkpoint } => commands::scatter(&run, checkpoint),
        Command::Sweep { run } => commands::sweep(&run),
        Command::Oracle { run } => commands::oracle(&run),
        Command::Compare {
            a,
            b,
            out,
            tol,
            column_tol,
            all_rows,
        } => compare::run(&a, &b, &out, tol, &column_tol, all_rows),
        Command::Figures { id, out, set } => commands::figures(&id, out, set),
    };
    ExitCode::from(code)
}
