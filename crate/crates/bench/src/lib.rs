//! Shared fixtures for the benchmarks.

use pathcausal::markov::Trajectory;
use pathcausal::{scenarios, JointMarkovModel};

/// Trajectory length used by every per-step benchmark.
pub const STEPS: usize = 10_000;

/// The bidirectional scenario and a fixed-seed trajectory from it.
pub fn bidirectional(n: usize) -> (JointMarkovModel, Trajectory) {
    let model = scenarios::bidirectional();
    let t = model.simulate(n, 1).expect("scenario simulates");
    (model, t)
}
