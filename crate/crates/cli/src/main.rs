mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Free energy, overlap laws and finite-N simulation of the SK model with a
/// Curie-Weiss interaction.
#[derive(Debug, Parser)]
#[command(name = "skfi", version)]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for all random streams.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Directory for reports, CSV tables and manifests.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curie-Weiss quantities: critical temperature, magnetization, region data.
    Cw,
    /// Minimize the Parisi functional.
    Parisi {
        /// Emit the one-atom curve q, P(delta_q) as CSV instead.
        #[arg(long)]
        one_atom_scan: bool,
    },
    /// The limiting free energy and its maximizers.
    FreeEnergy,
    /// Check the magnetization region for the configured u.
    Region,
    /// Monte Carlo observables over the configured N ladder.
    Simulate,
    /// Run a verification suite (or "all", or "manifest-replay").
    Verify {
        suite: String,
        /// Reduced sample sizes.
        #[arg(long)]
        quick: bool,
        /// Manifest to replay for "manifest-replay".
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Exact enumeration summaries per disorder sample.
    Enumerate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
