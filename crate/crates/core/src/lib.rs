//! Sample-path causal influence between discrete time series.
//!
//! The estimator runs two context-tree-weighting predictors for a target
//! process `X`: one that sees the past of a side process `Y` and one that
//! does not. The per-step KL divergence between their predictions estimates
//! how much `Y`'s past changes the forecast of `X` on the realized path.
//! Exact oracles for jointly Markov models provide the ground truth.

pub mod ctw;
pub mod error;
pub mod graphs;
pub mod info;
pub mod ingest;
pub mod markov;
pub mod measure;
pub mod scenarios;

pub use ctw::{kt_predict, regret_bound_plain, regret_bound_side_info, Context, ContextSchema, ContextTree, RegretBudget};
pub use error::{Error, Result};
pub use graphs::{build_unrolled_network, classify_markovicity, d_separated, Markovicity, MarkovicityReport, Node, NodeSet, Process, UnrolledDag};
pub use info::{conditional_mutual_information, entropy, kl_divergence, total_variation, Alphabet, KahanSum, ProbDist, Symbol, SymbolSeq};
pub use markov::{
    exact_pdi_rate, exact_tdi_rate, mc_di_rate, true_causal_trace, true_partial_causal_trace, true_restricted_brute,
    FilterState, JointMarkovModel, JointSymbol, McEstimate, StationaryDist,
};
pub use measure::{
    attach_truth, c_value, c_vector, causality_regret_bound, estimate_causal_trace, estimate_partial_trace,
    plug_in_di_rate, realized_causality_regret, CausalTrace, Direction, EstimatorConfig, TraceRow,
};
