//! Exact partial and truncated DI rates by enumeration under the stationary
//! law, and a Monte Carlo DI rate along a simulated path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{conditional_mutual_information, kl_divergence, KahanSum, ProbDist};

use super::stationary::stationary_path_distribution;
use super::JointMarkovModel;

/// Batches used for the batch-means standard error.
pub const MC_BATCHES: usize = 50;

/// Stationary expectation of `D(complete || partial with staleness k)`, in
/// bits per step. The partial law conditions on the last `d + k` target
/// (and `z`) symbols plus the `d` side symbols before the withheld ones,
/// which suffices for an order-`d` model. `k = 0` gives 0.
pub fn exact_pdi_rate(model: &JointMarkovModel, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let d = model.order();
    let j = model.joint_size();
    let mx = model.x_alphabet().size();
    let my = model.y_alphabet().size();
    let xz = j / my;
    let paths = stationary_path_distribution(model, d + k)?;
    let tail = j.pow(k as u32);
    let window_mask = j.pow(d as u32);
    let key_of = |u: usize| {
        let mut key = u / tail;
        let mut rest = u % tail;
        let mut codes = Vec::with_capacity(k);
        for _ in 0..k {
            codes.push(rest % j);
            rest /= j;
        }
        for &s in codes.iter().rev() {
            let js = model.joint_symbol(s);
            key = key * xz + js.x * (xz / mx) + js.z;
        }
        key
    };
    let mut mix = std::collections::HashMap::<usize, Vec<f64>>::new();
    for (u, &p) in paths.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row = model.x_row(u % window_mask);
        let acc = mix.entry(key_of(u)).or_insert_with(|| vec![0.0; mx]);
        for (a, r) in acc.iter_mut().zip(row) {
            *a += p * r;
        }
    }
    let mut rate = KahanSum::new();
    for (u, &p) in paths.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let complete = ProbDist::new(model.x_row(u % window_mask).to_vec())?;
        let partial = ProbDist::from_weights(mix[&key_of(u)].clone())?;
        rate.add(p * kl_divergence(&complete, &partial)?);
    }
    Ok(rate.total().max(0.0))
}

/// Stationary `I(X_i; Y_{i-k}^{i-1} | X_{i-k}^{i-1}[, Z_{i-k}^{i-1}])` in bits.
pub fn exact_tdi_rate(model: &JointMarkovModel, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let j = model.joint_size() as u64;
    let my = model.y_alphabet().size() as u64;
    let xz = j / my;
    let paths = stationary_path_distribution(model, k + 1)?;
    let entries = paths.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(u, &p)| {
        let mut rest = u as u64;
        let current = model.joint_symbol((rest % j) as usize);
        rest /= j;
        let (mut ys, mut xzs) = (0u64, 0u64);
        let mut scale = 1u64;
        for _ in 0..k {
            let s = model.joint_symbol((rest % j) as usize);
            rest /= j;
            ys += s.y as u64 * scale;
            xzs += (s.x as u64 * (xz / model.x_alphabet().size() as u64) + s.z as u64) * scale;
            scale *= my.max(xz);
        }
        (p, current.x as u64, ys, xzs)
    });
    Ok(conditional_mutual_information(entries))
}

/// Monte Carlo estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
    pub batches: usize,
}

/// Average of the true `C(i)` along one simulated path of length `n`.
pub fn mc_di_rate(model: &JointMarkovModel, n: usize, seed: u64) -> Result<McEstimate> {
    if n < MC_BATCHES * 2 {
        return Err(Error::InvalidParameter(format!("need at least {} steps", MC_BATCHES * 2)));
    }
    let traj = model.simulate(n, seed)?;
    let path = model.zip_path(
        traj.x.as_slice(),
        traj.y.as_slice(),
        traj.z.as_ref().map(|z| z.as_slice()),
    )?;
    let mut values = Vec::with_capacity(n);
    model.walk_causal(&path, |_, sd| {
        values.push(sd.causal_measure()?);
        Ok(())
    })?;
    let mean = values.iter().copied().collect::<KahanSum>().total() / n as f64;
    let size = n / MC_BATCHES;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(MC_BATCHES)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let bm = means.iter().sum::<f64>() / MC_BATCHES as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (MC_BATCHES - 1) as f64;
    Ok(McEstimate {
        mean,
        std_err: (var / MC_BATCHES as f64).sqrt(),
        n,
        batches: MC_BATCHES,
    })
}
