//! Built-in models with pinned parameters, so experiments and tests do not
//! depend on external files.
//!
//! The three ternary first-order scenarios cover the independent,
//! unidirectional (`Y` i.i.d. driving `X`) and bidirectional cases. The two
//! binary families reproduce the classic analytic examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::info::Alphabet;
use crate::markov::{JointMarkovModel, JointSymbol, KernelRows};

/// Names accepted by [`by_name`].
pub const SCENARIOS: [&str; 5] = ["independent", "unidirectional", "bidirectional", "cross-copy", "iid-influence"];

fn ternary() -> Alphabet {
    Alphabet::new(3).expect("3 >= 2")
}

fn binary() -> Alphabet {
    Alphabet::new(2).expect("2 >= 2")
}

/// `X` and `Y` each Markov on their own past, no coupling.
pub fn independent() -> JointMarkovModel {
    const X: [[f64; 3]; 3] = [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.25, 0.25, 0.5]];
    const Y: [[f64; 3]; 3] = [[0.5, 0.2, 0.3], [0.3, 0.4, 0.3], [0.1, 0.3, 0.6]];
    JointMarkovModel::from_xy_fn(1, ternary(), ternary(), |w| (X[w[0].x].to_vec(), Y[w[0].y].to_vec()))
        .expect("pinned independent model is valid")
}

/// `Y` i.i.d.; `X_i` depends on `(X_{i-1}, Y_{i-1})`.
pub fn unidirectional() -> JointMarkovModel {
    // X rows indexed [x_prev][y_prev].
    const X: [[[f64; 3]; 3]; 3] = [
        [[0.80, 0.10, 0.10], [0.30, 0.60, 0.10], [0.30, 0.10, 0.60]],
        [[0.60, 0.30, 0.10], [0.10, 0.80, 0.10], [0.10, 0.30, 0.60]],
        [[0.60, 0.10, 0.30], [0.10, 0.60, 0.30], [0.10, 0.10, 0.80]],
    ];
    const Y: [f64; 3] = [0.5, 0.3, 0.2];
    JointMarkovModel::from_xy_fn(1, ternary(), ternary(), |w| (X[w[0].x][w[0].y].to_vec(), Y.to_vec()))
        .expect("pinned unidirectional model is valid")
}

/// Both processes depend on both pasts. `Y` is persistent, so `X`'s longer
/// past carries information about `Y_{i-1}` that `X_{i-1}` alone does not:
/// `X` is not marginally Markov and depth-1 plug-in estimates are biased.
pub fn bidirectional() -> JointMarkovModel {
    // Rows indexed [x_prev][y_prev].
    const X: [[[f64; 3]; 3]; 3] = [
        [[0.80, 0.10, 0.10], [0.15, 0.75, 0.10], [0.15, 0.10, 0.75]],
        [[0.75, 0.15, 0.10], [0.10, 0.80, 0.10], [0.10, 0.15, 0.75]],
        [[0.75, 0.10, 0.15], [0.10, 0.75, 0.15], [0.10, 0.10, 0.80]],
    ];
    const Y: [[[f64; 3]; 3]; 3] = [
        [[0.90, 0.05, 0.05], [0.08, 0.90, 0.02], [0.08, 0.02, 0.90]],
        [[0.90, 0.08, 0.02], [0.05, 0.90, 0.05], [0.02, 0.08, 0.90]],
        [[0.90, 0.02, 0.08], [0.02, 0.90, 0.08], [0.05, 0.05, 0.90]],
    ];
    JointMarkovModel::from_xy_fn(1, ternary(), ternary(), |w| {
        (X[w[0].x][w[0].y].to_vec(), Y[w[0].x][w[0].y].to_vec())
    })
    .expect("pinned bidirectional model is valid")
}

/// Each process copies the other's previous value, flipped with probability `eps`.
pub fn cross_copy(eps: f64) -> Result<JointMarkovModel> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let row = |v: usize| if v == 0 { vec![1.0 - eps, eps] } else { vec![eps, 1.0 - eps] };
    JointMarkovModel::from_xy_fn(1, binary(), binary(), |w| (row(w[0].y), row(w[0].x)))
}

/// `Y_i ~ Bern(eps)` i.i.d.; `X_i ~ Bern(p1)` after `Y_{i-1} = 1`, `Bern(p2)` after `Y_{i-1} = 0`.
pub fn iid_influence(p1: f64, p2: f64, eps: f64) -> Result<JointMarkovModel> {
    for (name, v) in [("p1", p1), ("p2", p2), ("eps", eps)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    JointMarkovModel::from_xy_fn(1, binary(), binary(), |w| {
        let p = if w[0].y == 1 { p1 } else { p2 };
        (vec![1.0 - p, p], vec![1.0 - eps, eps])
    })
}

/// Seeded random model with every row entry at least `floor / m` (so the
/// lifted chain is ergodic whenever `floor > 0`).
pub fn random(
    order: usize,
    x: Alphabet,
    y: Alphabet,
    z: Option<Alphabet>,
    floor: f64,
    seed: u64,
) -> Result<JointMarkovModel> {
    if !(0.0..1.0).contains(&floor) {
        return Err(Error::InvalidParameter(format!("floor must lie in [0, 1), got {floor}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row = |m: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
        let t: f64 = w.iter().sum();
        w.iter().map(|v| floor / m as f64 + (1.0 - floor) * v / t).collect()
    };
    JointMarkovModel::from_fn(order, x, y, z, |_: &[JointSymbol]| KernelRows {
        x: row(x.size()),
        y: row(y.size()),
        z: z.map_or(Vec::new(), |a| row(a.size())),
    })
}

/// Seeded binary model of random order 1 or 2 whose `X` and `Y` rows each
/// depend on a random subset of the window components, so the unrolled
/// graph is sparse. Used for d-separation soundness checks.
pub fn sparse_random(seed: u64) -> Result<JointMarkovModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(1..=2);
    // masks[process][pos * 2 + component]
    let masks: Vec<Vec<bool>> = (0..2).map(|_| (0..2 * d).map(|_| rng.gen_bool(0.35)).collect()).collect();
    let table: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..1usize << (2 * d)).map(|_| rng.gen_range(0.05..0.95)).collect())
        .collect();
    JointMarkovModel::from_fn(d, binary(), binary(), None, |w| {
        let row = |t: usize| {
            let key = w.iter().enumerate().fold(0usize, |acc, (pos, s)| {
                let bits = [s.x, s.y];
                (0..2).fold(acc, |acc, c| acc * 2 + if masks[t][pos * 2 + c] { bits[c] } else { 0 })
            });
            let p = table[t][key];
            vec![1.0 - p, p]
        };
        KernelRows { x: row(0), y: row(1), z: Vec::new() }
    })
}

/// Default parameters for the parameterized families.
pub const CROSS_COPY_EPS: f64 = 0.01;
pub const IID_INFLUENCE: (f64, f64, f64) = (0.9, 0.1, 0.1);

/// Looks up a built-in scenario; `param` overrides `eps` for the two
/// binary families.
pub fn by_name(name: &str, eps: Option<f64>) -> Result<JointMarkovModel> {
    match name {
        "independent" => Ok(independent()),
        "unidirectional" => Ok(unidirectional()),
        "bidirectional" => Ok(bidirectional()),
        "cross-copy" => cross_copy(eps.unwrap_or(CROSS_COPY_EPS)),
        "iid-influence" => {
            let (p1, p2, e) = IID_INFLUENCE;
            iid_influence(p1, p2, eps.unwrap_or(e))
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown scenario {other:?}; expected one of {}",
            SCENARIOS.join(", ")
        ))),
    }
}
