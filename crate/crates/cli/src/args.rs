use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "massart-forge", version, about = "Hard Massart-noise instances: build, verify, sample, experiment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the asymptotic parameter schedule.
    Plan(PlanArgs),
    /// Sample a labelled dataset from a planted instance.
    Gen(GenArgs),
    /// Run the verification suite on a desk configuration.
    Verify(VerifyArgs),
    /// Run the distinguishing experiment.
    Experiment(ExperimentArgs),
    /// Write the densities of A and B on a grid.
    EmitDensity(DensityArgs),
    /// Re-run the command recorded in a manifest and compare outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PairArgs {
    #[arg(long, default_value_t = 0.05)]
    pub zeta: f64,
    #[arg(long, default_value_t = 10)]
    pub d: u32,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// natural log of M
    #[arg(long = "log-M")]
    pub log_m: f64,
    /// sets ζ = exp(−(log M)^s)
    #[arg(long = "zeta-exp", conflicts_with = "zeta")]
    pub zeta_exp: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub eta: f64,
    #[arg(long = "C-tau", default_value_t = 64.0)]
    pub c_tau: f64,
    #[arg(long = "C-m", default_value_t = 64.0)]
    pub c_m: f64,
    #[arg(long = "C-d", default_value_t = 8.0)]
    pub c_d: f64,
    #[arg(long = "C-zeta", default_value_t = 4.0)]
    pub c_zeta: f64,
    /// plan JSON; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 0.3)]
    pub eta: f64,
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// dataset CSV; the sidecar is written next to it with extension .json
    #[arg(long)]
    pub out: PathBuf,
    /// omit the hidden direction from the sidecar
    #[arg(long)]
    pub redact: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 12)]
    pub k: usize,
    #[arg(long, default_value_t = 0.3)]
    pub eta: f64,
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// report JSON; stdout when omitted
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 0.3)]
    pub eta: f64,
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 0.01)]
    pub tau: f64,
    /// a count `N` (seeds 0..N) or a comma-separated list
    #[arg(long, default_value = "10")]
    pub seeds: String,
    /// comma-separated subset of constant, chow1, chow2
    #[arg(long, default_value = "constant,chow1,chow2")]
    pub learners: String,
    #[arg(long, default_value_t = 12)]
    pub k: usize,
    #[arg(long, default_value_t = 100_000)]
    pub heldout: usize,
    #[arg(long = "query-budget", default_value_t = 1000)]
    pub query_budget: usize,
    /// answer with a dense estimate moved toward the null value
    #[arg(long)]
    pub adversarial: bool,
    /// report JSON; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 10_000)]
    pub grid: usize,
    /// window start; defaults to −dδ−1
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// window end; defaults to dδ+1
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// directory for the replayed outputs; defaults to `replay/` next to the manifest
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}
