use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hamforge::synth::Route;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "hamforge", version, about = "Grouped Pauli-term compilation and qDRIFT experiments")]
pub struct Cli {
    /// File of `key=value` lines supplying any flag; the command line wins.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for data-parallel work (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group, synthesize and cost a Hamiltonian.
    #[command(args_override_self = true)]
    Compile(CompileArgs),
    /// Check circuits against dense exponentials and the grouping against
    /// its Hamiltonian.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// qDRIFT error sweep, single Paulis vs grouped fragments.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Error and cost bounds.
    #[command(args_override_self = true)]
    Bounds(BoundsArgs),
}

/// Where the Hamiltonian comes from.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = false, multiple = false)]
pub struct SourceArgs {
    /// Text file of `<coeff> <PAULI>` lines.
    #[arg(long)]
    pub hamiltonian: Option<PathBuf>,
    /// Built-in model: H2, LiH, heis4, heis6.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompileArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Evolution time of the emitted circuits.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Stopping threshold of the greedy allocation.
    #[arg(long, default_value_t = 1e-12)]
    pub eps: f64,
    /// Overrides the per-fragment synthesis route.
    #[arg(long)]
    pub route: Option<Route>,
    #[arg(long, env = "HAMFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "hamforge-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Grouping JSON to check instead of the built-in one.
    #[arg(long)]
    pub grouping: Option<PathBuf>,
    /// Random evolution times per fragment.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Largest accepted operator-norm deviation.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, env = "HAMFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "hamforge-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Step counts, e.g. `4,8,16` or `4,8,...,512`.
    #[serde(rename = "Ns")]
    #[arg(long = "Ns", default_value = "4,8,...,512")]
    pub ns: String,
    /// Protocol samples per state.
    #[serde(rename = "M")]
    #[arg(long = "M", default_value_t = 500)]
    pub m: usize,
    /// Haar-random input states.
    #[serde(rename = "K")]
    #[arg(long = "K", default_value_t = 32)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Error at which reductions are read (default: middle of the overlap).
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, env = "HAMFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// CSV path; the summary and manifest go next to it.
    #[arg(long, default_value = "hamforge-out/sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Grouped 1-norm, overriding the source.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Single-Pauli 1-norm, overriding the source.
    #[serde(rename = "lambda-prime")]
    #[arg(long = "lambda-prime")]
    pub lambda_prime: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[serde(rename = "N")]
    #[arg(long = "N", default_value_t = 100)]
    pub n: usize,
    /// Truncated 1-norm.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Failure probability of the high-probability cost bound.
    #[serde(rename = "eps-c")]
    #[arg(long = "eps-c", default_value_t = 0.05)]
    pub eps_c: f64,
    #[arg(long, env = "HAMFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "hamforge-out")]
    pub out: PathBuf,
}

