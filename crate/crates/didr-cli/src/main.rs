use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use didr_cli::commands;
use didr_cli::config::parse_config;
use std::fs;
use std::path::PathBuf;

/// Delay-infectivity / delay-recovery SIR model driver.
#[derive(Parser)]
#[command(name = "didr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario and write the trajectory CSV.
    Simulate {
        /// Scenario configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the scenario once per sweep value and summarize peaks.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report the disease-free and endemic steady states.
    Steady {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the agent-based ensemble and compare it with the mean-field
    /// solution.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the seed from the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate the recovery survival phi, density psi, and infectivity
    /// rho.
    Dexp {
        /// Recovery rate scale.
        #[arg(long)]
        mu: f64,
        /// Recovery delay tau2.
        #[arg(long)]
        tau: f64,
        /// Infectivity delay tau1 (defaults to 0: rho is 1 from t = 0).
        #[arg(long, default_value_t = 0.0)]
        tau1: f64,
        /// Upper end of the time grid. Near the survival bound
        /// (mu*tau close to 1/e) phi underflows within a few delays;
        /// reduce this if the tabulation reports an underflow.
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 501)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: &PathBuf) -> Result<didr_cli::config::ScenarioConfig> {
    let text =
        fs::read_to_string(config).with_context(|| format!("cannot read {}", config.display()))?;
    Ok(parse_config(&text)?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let written = match &cli.command {
        Command::Simulate { config, out } => commands::cmd_simulate(&load(config)?, out)?,
        Command::Sweep { config, out } => commands::cmd_sweep(&load(config)?, out)?,
        Command::Steady { config, out } => commands::cmd_steady(&load(config)?, out)?,
        Command::Oracle { config, out, seed } => commands::cmd_oracle(&load(config)?, out, *seed)?,
        Command::Dexp {
            mu,
            tau,
            tau1,
            t_end,
            points,
            out,
        } => commands::cmd_dexp(*mu, *tau, *tau1, *t_end, *points, out)?,
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
