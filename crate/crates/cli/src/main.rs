use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod failure;

use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "qntk", version, about = "Neural tangent kernel estimation for Clifford+Pauli-rotation circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate K(x, x') for one pair of inputs.
    EstimateNtk(NtkArgs),
    /// Estimate the kernel matrix on a list of inputs.
    EstimateGram(GramArgs),
    /// Estimate the trained infinite-width mean at query inputs.
    EstimateMu(MuArgs),
    /// Print the number of samples needed for a target accuracy.
    SampleSize(SampleSizeArgs),
    /// Cross-check the fast engine against the dense reference simulator.
    Verify(VerifyArgs),
    /// Time model evaluation and estimation over sweeps of n, L, m and N.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Sampling {
    /// Accuracy target.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Failure probability, strictly between 0 and 1.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Explicit number of samples, overriding the calculators.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Average over all 4^L angle assignments instead of sampling.
    #[arg(long, conflicts_with = "samples")]
    pub enumerate: bool,
    /// Refuse to run when the calculated N exceeds this.
    #[arg(long, default_value_t = 1_000_000_000)]
    pub max_samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core and 1 runs serially.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args, Debug)]
pub struct NtkArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    /// Input bit string; give it twice for x and x', once to use x' = x.
    #[arg(long)]
    pub query: Vec<String>,
    #[command(flatten)]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GramArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    /// CSV dataset whose inputs are used; labels are ignored.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub query: Vec<String>,
    #[command(flatten)]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MuArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, required = true)]
    pub query: Vec<String>,
    #[command(flatten)]
    pub sampling: Sampling,
    /// Samples for the pilot Gram estimate that feeds the sample-size formula.
    #[arg(long, default_value_t = 1000)]
    pub pilot: u64,
    /// Make the accuracy guarantee hold uniformly over every input.
    #[arg(long = "uniform-over-X")]
    pub uniform: bool,
    /// Add ridge * I before inverting. The result is regularized regression,
    /// not the plain kernel regression limit.
    #[arg(long, allow_negative_numbers = true)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleSizeArgs {
    /// Which estimate the sample size is for.
    #[arg(value_enum)]
    pub target: Target,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: f64,
    /// Circuit file supplying L and m.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    #[arg(long = "params")]
    pub num_params: Option<usize>,
    #[arg(long = "terms")]
    pub num_terms: Option<usize>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub d_train: Option<usize>,
    /// Operator norm of the inverse training kernel.
    #[arg(long)]
    pub norm_k_inv: Option<f64>,
    /// Euclidean norm of the label vector.
    #[arg(long)]
    pub norm_y: Option<f64>,
    /// Euclidean norm of the inverse training kernel applied to the labels.
    #[arg(long)]
    pub norm_k_inv_y: Option<f64>,
    /// Estimate the norms from a pilot Gram with this many samples.
    #[arg(long)]
    pub pilot: Option<u64>,
    #[arg(long = "uniform-over-X")]
    pub uniform: bool,
    /// Input width for the uniform bound when no circuit is given.
    #[arg(long)]
    pub input_bits: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Ntk,
    Mu,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cases per algebraic check.
    #[arg(long)]
    pub cases: Option<usize>,
    /// Random circuits per circuit-level check.
    #[arg(long)]
    pub templates: Option<usize>,
    #[arg(long, hide = true)]
    pub inject_phase_fault: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Small sweep for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the CSV of timings.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::EstimateNtk(a) => commands::estimate_ntk(&a),
        Command::EstimateGram(a) => commands::estimate_gram(&a),
        Command::EstimateMu(a) => commands::estimate_mu(&a),
        Command::SampleSize(a) => commands::sample_size(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Bench(a) => commands::bench(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
