//! `ruinsim`: cumulant, simulation, ruin and tail pipelines from one config file.
//!
//! Exit codes: 0 success, 1 config or I/O error, 2 hypothesis warnings,
//! 3 hypothesis failures (including no positive root), 4 numerical quality.

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ruinsim", version, about = "Ruin probabilities under a Lévy price model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// TOML config, or a manifest.json from an earlier run
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "RUINSIM_SEED")]
    pub seed: Option<u64>,
    /// 0 uses every core
    #[arg(long, env = "RUINSIM_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory (created if missing)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of sampled paths
    #[arg(long)]
    pub paths: Option<u64>,
    /// Thresholds: "geom:lo:hi:count" or "u1,u2,..."
    #[arg(long = "u")]
    pub u: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Cumulant on a q-grid, its domain, the positive root and the condition report
    Model {
        #[command(flatten)]
        common: Common,
        /// Exit with status 3 when no positive root exists
        #[arg(long)]
        require_beta: bool,
    },
    /// Sample cycles and/or perpetuities to CSV
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Only cycles (default: both)
        #[arg(long)]
        cycles: bool,
        /// Only perpetuities (default: both)
        #[arg(long)]
        perpetuities: bool,
    },
    /// Ruin bracket, direct crossing estimates and Kesten moments
    Ruin {
        #[command(flatten)]
        common: Common,
        /// Paths for the direct estimator (overrides run.direct_paths)
        #[arg(long)]
        direct: Option<u64>,
    },
    /// Tail index and constant from perpetuity samples
    Tail {
        #[command(flatten)]
        common: Common,
        /// Perpetuity CSV to analyse instead of sampling
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Machine-readable hypothesis report
    Check {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Model { common, require_beta } => commands::model(&common, require_beta),
        Command::Simulate {
            common,
            cycles,
            perpetuities,
        } => {
            let both = !cycles && !perpetuities;
            commands::simulate(&common, cycles || both, perpetuities || both)
        }
        Command::Ruin { common, direct } => commands::ruin(&common, direct),
        Command::Tail { common, csv } => commands::tail(&common, csv.as_deref()),
        Command::Check { common } => commands::check(&common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
