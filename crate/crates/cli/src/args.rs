use std::path::PathBuf;

use chainvar::bench::Method;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Model-file format understood by this build; must match the library.
pub const MODEL_FORMAT: &str = "1";

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (model format 1)");

#[derive(Debug, Parser)]
#[command(name = "chainvar", version = VERSION, about = "Variational bounds for discrete graphical models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Sample a synthetic dynamic Bayesian network with its evidence.
    Generate(GenerateArgs),
    /// Exact log-evidence and posterior marginals.
    Exact(ExactArgs),
    /// Fit a variational approximation.
    Fit(FitArgs),
    /// Run the comparison grid on synthetic networks and write a CSV.
    Benchmark(BenchmarkArgs),
    /// Summarize a benchmark CSV and draw one SVG per variables-per-slice.
    Plot(PlotArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub slices: usize,
    /// Hidden chain variables per slice.
    #[arg(long = "vars", default_value_t = 3)]
    pub vars_per_slice: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `name=state,...`; overrides the evidence stored in the model file.
    #[arg(long)]
    pub evidence: Option<String>,
    /// Variable whose posterior marginal is printed; repeatable.
    #[arg(long = "marginal")]
    pub marginals: Vec<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Bn,
    Cg,
    Hidden,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub evidence: Option<String>,
    /// Structure file; mean field when omitted.
    #[arg(long = "q-structure")]
    pub q_structure: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FitMethod::Bn)]
    pub method: FitMethod,
    /// Mixture of K mean fields (hidden method only).
    #[arg(long)]
    pub mixture: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Initial step of damped chain-graph updates.
    #[arg(long, default_value_t = 1.0)]
    pub damping: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    /// `a..b` (inclusive), a single count, or a comma list.
    #[arg(long, default_value = "2..7", value_parser = parse_counts)]
    pub slices: Counts,
    #[arg(long = "vars", default_value = "3,4", value_parser = parse_counts)]
    pub vars_per_slice: Counts,
    /// Comma list of `kind:variant`; all nine standard methods by default.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 20)]
    pub nets: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Record wall-clock times (the CSV is then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    /// Benchmark CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for the SVGs, the summary and the manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Counts(pub Vec<usize>);

pub fn parse_counts(s: &str) -> Result<Counts, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("'{t}' is not a count"));
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if out.contains(&0) {
        return Err("counts must be at least 1".into());
    }
    Ok(Counts(out))
}
