//! Reproducible experiment runner for the Dunkl inequality laboratory.
//!
//! Exit codes: 0 = all checks passed, 1 = an inequality violation beyond the
//! error bars, 2 = configuration error, 3 = computation error.

mod config;
mod runner;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use runner::RunArgs;

#[derive(Parser)]
#[command(name = "dunkl-lab", version, about = "Dunkl operators and functional-inequality laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment configuration (TOML or JSON, by extension).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent chains.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl CommonArgs {
    fn run_args(&self) -> RunArgs {
        RunArgs {
            config_path: self.config.clone(),
            seed: self.seed,
            out: self.out.clone(),
            jobs: self.jobs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact-algebra identity suite (Leibniz, Laplacian two-way,
    /// commutativity) plus integration-by-parts residuals.
    VerifyIdentities(CommonArgs),
    /// Run MCMC chains and export them with diagnostics.
    Sample(CommonArgs),
    /// Estimate Poincare and log-Sobolev constants.
    EstimateConstants(CommonArgs),
    /// Run one named inequality check from the catalogue.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Check name; overrides the config's `check` field.
        #[arg(long)]
        check: Option<String>,
    },
    /// Exponential-integrability and concentration scans with plot data.
    Scan(CommonArgs),
    /// List the catalogue of implemented checks.
    ListChecks,
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::VerifyIdentities(common) => runner::cmd_verify_identities(&common.run_args()),
        Command::Sample(common) => runner::cmd_sample(&common.run_args()),
        Command::EstimateConstants(common) => runner::cmd_estimate_constants(&common.run_args()),
        Command::Check { common, check } => runner::cmd_check(&common.run_args(), check.as_deref()),
        Command::Scan(common) => runner::cmd_scan(&common.run_args()),
        Command::ListChecks => runner::cmd_list_checks(),
    };
    std::process::exit(code);
}
