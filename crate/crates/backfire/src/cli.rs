use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{Overrides, RunConfig};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "backfire", version, about = "Heterogeneous treatment effects for randomized survey experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bootstrap validation: observed uplift by quantile of predicted effect.
    Evaluate(Flags),
    /// Meta-model feature importances of the predicted effects.
    Importance(Flags),
    /// Extreme-segment profiles, per-category uplift and optional targeting.
    Segments(Flags),
    /// Treatment × category interaction regressions.
    Ols(Flags),
    /// Write the configured synthetic cohort to cohort.csv.
    Synth(Flags),
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub quantiles: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Variable to analyze; repeat for several.
    #[arg(long = "variable")]
    pub variables: Vec<String>,
    /// Extreme-segment fraction.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Targeting threshold on the predicted effect.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plots: bool,
}

impl Flags {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            replicates: self.replicates,
            quantiles: self.quantiles,
            train_fraction: self.train_fraction,
            variables: self.variables.clone(),
            fraction: self.fraction,
            threshold: self.threshold,
            plots: self.plots,
        }
    }
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Evaluate(f) | Command::Importance(f) | Command::Segments(f) | Command::Ols(f) | Command::Synth(f) => f,
        }
    }
}

/// Loads the configuration, applies flag overrides and runs the command.
pub fn execute(command: &Command) -> Result<Vec<PathBuf>> {
    let flags = command.flags();
    let config = RunConfig::load(&flags.config)?;
    let base = flags.config.parent().map(PathBuf::from).unwrap_or_default();
    let run = config.resolve(&flags.overrides(), &base)?;
    match command {
        Command::Evaluate(_) => commands::cmd_evaluate(&run),
        Command::Importance(_) => commands::cmd_importance(&run),
        Command::Segments(_) => commands::cmd_segments(&run),
        Command::Ols(_) => commands::cmd_ols(&run),
        Command::Synth(_) => commands::cmd_synth(&run),
    }
}
