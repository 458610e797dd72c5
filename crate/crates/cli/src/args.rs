//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Sample-path causal influence between discrete time series.
#[derive(Debug, Parser, Serialize)]
#[command(name = "pathcausal", version, about, long_about = None)]
pub struct Cli {
    /// Output directory; created if missing.
    #[arg(long, global = true, env = "PATHCAUSAL_OUT", default_value = "pathcausal-out")]
    pub out: PathBuf,

    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated values with a header row.
    Csv,
    /// One JSON object per line.
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    /// Influence of Y on X.
    Yx,
    /// Influence of X on Y.
    Xy,
    /// Both directions, one trace each.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioArg {
    Independent,
    Unidirectional,
    Bidirectional,
    CrossCopy,
    IidInfluence,
}

impl ScenarioArg {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioArg::Independent => "independent",
            ScenarioArg::Unidirectional => "unidirectional",
            ScenarioArg::Bidirectional => "bidirectional",
            ScenarioArg::CrossCopy => "cross-copy",
            ScenarioArg::IidInfluence => "iid-influence",
        }
    }
}

/// A model given either as a TOML file or as a built-in scenario.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Joint Markov model description (TOML).
    #[arg(long, conflicts_with = "scenario")]
    pub model: Option<PathBuf>,

    /// Built-in model with pinned parameters.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,

    /// Flip/noise probability for the cross-copy and iid-influence scenarios.
    #[arg(long, requires = "scenario")]
    pub eps: Option<f64>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Simulate a joint Markov model and write one symbol file per process.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of time steps.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Estimate the causal measure along observed symbol sequences.
    Estimate {
        /// Target process symbols (CSV with a `symbol` column).
        #[arg(long)]
        x: PathBuf,
        /// Side process symbols.
        #[arg(long)]
        y: PathBuf,
        /// Optional conditioning process symbols.
        #[arg(long)]
        z: Option<PathBuf>,
        /// Context depth of both predictors.
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Staleness: estimate the partial measure withholding the `k` most
        /// recent side symbols from the reference predictor.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = DirectionArg::Yx)]
        direction: DirectionArg,
        /// Alphabet sizes; inferred from the model or the data if omitted.
        #[arg(long)]
        x_alphabet: Option<usize>,
        #[arg(long)]
        y_alphabet: Option<usize>,
        #[arg(long)]
        z_alphabet: Option<usize>,
        /// Model that generated the data: adds the exact truth column.
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Regret bounds of the two predictors and the causality-regret bound.
    Bounds {
        /// Target alphabet size.
        #[arg(long)]
        m: usize,
        /// Horizon.
        #[arg(long)]
        n: u64,
        /// Leaves of the restricted predictor's tree.
        #[arg(long)]
        restricted_leaves: Option<u64>,
        /// Leaves of the complete predictor's tree.
        #[arg(long)]
        complete_leaves: Option<u64>,
        /// Nodes of the complete predictor's tree.
        #[arg(long)]
        complete_nodes: Option<u64>,
        /// Derive tree sizes from a depth instead (with --side-alphabet and optional --k).
        #[arg(long, conflicts_with_all = ["restricted_leaves", "complete_leaves", "complete_nodes"])]
        d: Option<usize>,
        #[arg(long, requires = "d")]
        side_alphabet: Option<usize>,
        #[arg(long, requires = "d")]
        k: Option<usize>,
        /// Trace file from `estimate` (CSV): emit the bound at every step.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Unrolled Bayesian network, edge list and Markovicity class of a model.
    Dsep {
        #[command(flatten)]
        model: ModelArgs,
        /// Time steps in the exported graph.
        #[arg(long, default_value_t = 6)]
        horizon: usize,
    },
    /// Market pipeline: align, quantize, shift, estimate, summarize by state.
    Stocks {
        /// Prices of the market that closes first on each calendar date.
        #[arg(long)]
        early: PathBuf,
        /// Prices of the market that closes later on each calendar date.
        #[arg(long)]
        late: PathBuf,
        #[arg(long, default_value = "HS")]
        early_name: String,
        #[arg(long, default_value = "DJ")]
        late_name: String,
        /// Quantization threshold as a fraction.
        #[arg(long, default_value_t = 0.008)]
        threshold: f64,
        /// Steps excluded from the state summary.
        #[arg(long, default_value_t = 1)]
        skip: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Estimate { .. } => "estimate",
            Command::Bounds { .. } => "bounds",
            Command::Dsep { .. } => "dsep",
            Command::Stocks { .. } => "stocks",
        }
    }
}
