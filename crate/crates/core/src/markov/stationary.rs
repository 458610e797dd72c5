//! Invariant law of the lifted window chain, ergodicity checks, and exact
//! path probabilities.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::error::{Error, Result};

use super::JointMarkovModel;

/// Models up to this many lifted states are solved directly; larger ones by
/// power iteration.
const DIRECT_SOLVE_LIMIT: usize = 512;
/// Required `max |pi A - pi|`.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Largest table of path probabilities [`path_distribution`] will build.
pub const MAX_PATHS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDist {
    probs: Vec<f64>,
    residual: f64,
}

impl StationaryDist {
    /// Probability of each lifted window.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `max |pi A - pi|` achieved.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Unique invariant law of the lifted chain. Fails with
/// [`Error::NonErgodic`] when the chain has more than one recurrent class or
/// its recurrent class is periodic. Transient windows get zero mass.
pub fn stationary_distribution(model: &JointMarkovModel) -> Result<StationaryDist> {
    let w_count = model.window_count();
    let j = model.joint_size();
    check_ergodic(model)?;

    let mut pi = if w_count <= DIRECT_SOLVE_LIMIT {
        // (A^T - I) pi = 0 with one equation swapped for sum(pi) = 1.
        let mut m = DMatrix::<f64>::zeros(w_count, w_count);
        for w in 0..w_count {
            for s in 0..j {
                let p = model.transition(w, s);
                if p > 0.0 {
                    m[(model.shift(w, s), w)] += p;
                }
            }
            m[(w, w)] -= 1.0;
        }
        for c in 0..w_count {
            m[(w_count - 1, c)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(w_count);
        rhs[w_count - 1] = 1.0;
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NonErgodic("singular stationary system".into()))?;
        sol.iter().copied().collect::<Vec<f64>>()
    } else {
        let mut pi = vec![1.0 / w_count as f64; w_count];
        for _ in 0..200_000 {
            let next = step(model, &pi);
            let diff = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            pi = next;
            if diff < STATIONARY_TOL * 1e-3 {
                break;
            }
        }
        pi
    };
    for v in &mut pi {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for v in &mut pi {
        *v /= total;
    }
    let next = step(model, &pi);
    let residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if residual > STATIONARY_TOL {
        return Err(Error::NonErgodic(format!("stationary residual {residual:e} above tolerance")));
    }
    Ok(StationaryDist { probs: pi, residual })
}

/// One application of the lifted transition matrix: `pi A`.
fn step(model: &JointMarkovModel, pi: &[f64]) -> Vec<f64> {
    let j = model.joint_size();
    let mut next = vec![0.0; pi.len()];
    for (w, &p) in pi.iter().enumerate() {
        if p > 0.0 {
            for s in 0..j {
                next[model.shift(w, s)] += p * model.transition(w, s);
            }
        }
    }
    next
}

/// Exactly one closed communicating class, and that class aperiodic.
fn check_ergodic(model: &JointMarkovModel) -> Result<()> {
    let w_count = model.window_count();
    let j = model.joint_size();
    let mut g = DiGraph::<(), ()>::with_capacity(w_count, w_count * j);
    for _ in 0..w_count {
        g.add_node(());
    }
    for w in 0..w_count {
        for s in 0..j {
            if model.transition(w, s) > 0.0 {
                g.add_edge(NodeIndex::new(w), NodeIndex::new(model.shift(w, s)), ());
            }
        }
    }
    let sccs = tarjan_scc(&g);
    let mut component = vec![0usize; w_count];
    for (c, members) in sccs.iter().enumerate() {
        for n in members {
            component[n.index()] = c;
        }
    }
    let closed: Vec<usize> = (0..sccs.len())
        .filter(|&c| {
            sccs[c]
                .iter()
                .all(|n| g.neighbors(*n).all(|m| component[m.index()] == c))
        })
        .collect();
    if closed.len() != 1 {
        return Err(Error::NonErgodic(format!("{} recurrent classes", closed.len())));
    }
    let class = closed[0];
    let start = sccs[class][0];
    let mut level = vec![usize::MAX; w_count];
    level[start.index()] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut period = 0usize;
    while let Some(u) = queue.pop_front() {
        for v in g.neighbors(u) {
            if component[v.index()] != class {
                continue;
            }
            if level[v.index()] == usize::MAX {
                level[v.index()] = level[u.index()] + 1;
                queue.push_back(v);
            } else {
                let gap = (level[u.index()] + 1).abs_diff(level[v.index()]);
                period = gcd(period, gap);
            }
        }
    }
    if period != 1 {
        return Err(Error::NonErgodic(format!("recurrent class has period {period}")));
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Probabilities of every joint path of length `len` starting from the
/// model's initial law. Paths are indexed in base `J`, oldest symbol first.
pub fn path_distribution(model: &JointMarkovModel, len: usize) -> Result<Vec<f64>> {
    paths_from(model, model.initial()?, len)
}

/// As [`path_distribution`] but always under the stationary law.
pub fn stationary_path_distribution(model: &JointMarkovModel, len: usize) -> Result<Vec<f64>> {
    paths_from(model, model.stationary()?.probs(), len)
}

fn paths_from(model: &JointMarkovModel, law: &[f64], len: usize) -> Result<Vec<f64>> {
    let j = model.joint_size();
    let d = model.order();
    let total = j
        .checked_pow(len as u32)
        .filter(|&t| t <= MAX_PATHS)
        .ok_or_else(|| Error::InstanceTooLarge(format!("{j}^{len} joint paths")))?;
    if len <= d {
        // Marginal of the first `len` window symbols.
        let tail = j.pow((d - len) as u32);
        let mut out = vec![0.0; total];
        for (w, &p) in law.iter().enumerate() {
            out[w / tail] += p;
        }
        return Ok(out);
    }
    let mut cur = law.to_vec();
    let mut cur_len = d;
    while cur_len < len {
        let mut next = vec![0.0; cur.len() * j];
        let mask = j.pow(d as u32);
        for (u, &p) in cur.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let w = u % mask;
            for s in 0..j {
                next[u * j + s] = p * model.transition(w, s);
            }
        }
        cur = next;
        cur_len += 1;
    }
    debug_assert_eq!(cur.len(), total);
    Ok(cur)
}
