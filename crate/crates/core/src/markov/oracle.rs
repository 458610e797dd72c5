//! Exact conditional laws along a given history, and the true causal
//! measures built from them.

use crate::error::{Error, Result};
use crate::info::{kl_divergence, ProbDist, Symbol};

use super::{JointMarkovModel, JointSymbol, Observation};

/// Enumeration budget for the brute-force oracle (joint paths visited).
pub const BRUTE_LIMIT: u64 = 1 << 22;

/// Complete and reference laws of `X_i` at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDists {
    pub complete: ProbDist,
    pub reference: ProbDist,
}

impl StepDists {
    pub fn causal_measure(&self) -> Result<f64> {
        kl_divergence(&self.complete, &self.reference)
    }
}

/// Law of `X_i` given partially observed symbols `obs[0..i]`, by summing the
/// joint law over every compatible completion of the path. Independent of
/// the filter; exponential in the number of hidden components.
pub fn brute_predict_x(model: &JointMarkovModel, obs: &[Observation]) -> Result<ProbDist> {
    let i = obs.len();
    let d = model.order();
    let len = (i + 1).max(d);
    let j = model.joint_size();
    let allowed: Vec<Vec<usize>> = (0..len)
        .map(|t| {
            (0..j)
                .filter(|&s| t >= i || obs[t].matches(model.joint_symbol(s)))
                .collect()
        })
        .collect();
    let combos = allowed
        .iter()
        .try_fold(1u64, |acc, a| acc.checked_mul(a.len() as u64))
        .filter(|&c| c <= BRUTE_LIMIT)
        .ok_or_else(|| Error::InstanceTooLarge(format!("brute-force marginalization over {len} steps")))?;
    debug_assert!(combos > 0);
    let init = model.initial()?;
    let mut weights = vec![0.0; model.x_alphabet().size()];
    let mut path = Vec::with_capacity(len);
    enumerate(model, &allowed, init, i, &mut path, 0, 1.0, &mut weights);
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::ZeroProbabilityObservation(i));
    }
    ProbDist::from_weights(weights)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    model: &JointMarkovModel,
    allowed: &[Vec<usize>],
    init: &[f64],
    target: usize,
    path: &mut Vec<usize>,
    window: usize,
    prob: f64,
    weights: &mut [f64],
) {
    let t = path.len();
    let d = model.order();
    let j = model.joint_size();
    if t == allowed.len() {
        weights[model.joint_symbol(path[target]).x] += prob;
        return;
    }
    for &s in &allowed[t] {
        let (w, p) = if t < d {
            let w = window * j + s;
            let p = if t + 1 == d { prob * init[w] } else { prob };
            (w, p)
        } else {
            (model.shift(window, s), prob * model.transition(window, s))
        };
        if p == 0.0 {
            continue;
        }
        path.push(s);
        enumerate(model, allowed, init, target, path, w, p, weights);
        path.pop();
    }
}

/// Restricted law `p(x_i | x^{i-1}[, z^{i-1}])` by brute-force summation over
/// all hidden `y` paths. `i = x_hist.len()`.
pub fn true_restricted_brute(model: &JointMarkovModel, x_hist: &[Symbol], z_hist: Option<&[Symbol]>) -> Result<ProbDist> {
    let obs = hidden_y_obs(model, x_hist, z_hist)?;
    brute_predict_x(model, &obs)
}

fn hidden_y_obs(model: &JointMarkovModel, x_hist: &[Symbol], z_hist: Option<&[Symbol]>) -> Result<Vec<Observation>> {
    if model.has_z() != z_hist.is_some() {
        return Err(Error::InvalidParameter("z history presence does not match the model".into()));
    }
    if let Some(z) = z_hist {
        if z.len() != x_hist.len() {
            return Err(Error::LengthMismatch { left: x_hist.len(), right: z.len() });
        }
    }
    Ok((0..x_hist.len())
        .map(|t| Observation {
            x: Some(x_hist[t]),
            y: None,
            z: Some(z_hist.map_or(0, |z| z[t])),
        })
        .collect())
}

impl JointMarkovModel {
    /// Partial law `p(x_i | x^{i-1}, y^{i-1-k}[, z^{i-1}])` from the finite
    /// window that suffices for an order-`d` model: the last `d + k` target
    /// (and `z`) symbols and the `d` side symbols preceding the withheld ones.
    ///
    /// `x_win` and `z_win` cover `i-k-d .. i-1`, `y_win` covers `i-k-d .. i-k-1`.
    pub fn true_partial_dist(
        &self,
        x_win: &[Symbol],
        y_win: &[Symbol],
        z_win: Option<&[Symbol]>,
        k: usize,
    ) -> Result<ProbDist> {
        let d = self.order();
        if x_win.len() != d + k {
            return Err(Error::WindowLength { expected: d + k, got: x_win.len() });
        }
        if y_win.len() != d {
            return Err(Error::WindowLength { expected: d, got: y_win.len() });
        }
        if let Some(z) = z_win {
            if z.len() != d + k {
                return Err(Error::WindowLength { expected: d + k, got: z.len() });
            }
        }
        if self.has_z() != z_win.is_some() {
            return Err(Error::InvalidParameter("z window presence does not match the model".into()));
        }
        let zs = |t: usize| z_win.map_or(0, |z| z[t]);
        let window: Vec<JointSymbol> = (0..d)
            .map(|t| JointSymbol {
                x: x_win[t],
                y: y_win[t],
                z: zs(t),
            })
            .collect();
        let mut state = self.filter_at_window(&window, d)?;
        for (t, &x) in x_win.iter().enumerate().take(d + k).skip(d) {
            let obs = Observation {
                x: Some(x),
                y: None,
                z: Some(zs(t)),
            };
            self.filter_update(&mut state, obs)?;
        }
        self.filter_predict_x(&state)
    }

    /// Partial law for `X_i`, `i = x.len()`, from the whole history: `y` is
    /// revealed only at positions `< i - k`. `k = 0` gives the complete law,
    /// `k >= i` the restricted one.
    pub fn true_partial_dist_history(
        &self,
        x: &[Symbol],
        y: &[Symbol],
        z: Option<&[Symbol]>,
        k: usize,
    ) -> Result<ProbDist> {
        let path = self.zip_path(x, y, z)?;
        let i = path.len();
        let mut state = self.filter_start()?;
        for (t, &s) in path.iter().enumerate() {
            let obs = if t + k < i { Observation::full(s) } else { Observation::hide_y(s) };
            self.filter_update(&mut state, obs)?;
        }
        self.filter_predict_x(&state)
    }

    /// Complete and restricted laws at every step of a path.
    pub fn causal_dists(&self, x: &[Symbol], y: &[Symbol], z: Option<&[Symbol]>) -> Result<Vec<StepDists>> {
        let path = self.zip_path(x, y, z)?;
        let mut out = Vec::with_capacity(path.len());
        self.walk_causal(&path, |_, sd| {
            out.push(sd);
            Ok(())
        })?;
        Ok(out)
    }

    /// Visits `(i, StepDists)` along `path` without storing them.
    pub(crate) fn walk_causal<F>(&self, path: &[JointSymbol], mut visit: F) -> Result<()>
    where
        F: FnMut(usize, StepDists) -> Result<()>,
    {
        let d = self.order();
        let mut full = self.filter_start()?;
        let mut restricted = self.filter_start()?;
        for (t, &s) in path.iter().enumerate() {
            let complete = if t < d {
                self.filter_predict_x(&full)?
            } else {
                let w = self.encode(&path[t - d..t])?;
                ProbDist::new(self.x_row(w).to_vec())?
            };
            let reference = self.filter_predict_x(&restricted)?;
            visit(t, StepDists { complete, reference })?;
            if t < d {
                self.filter_update(&mut full, Observation::full(s))?;
            }
            self.filter_update(&mut restricted, Observation::hide_y(s))?;
        }
        Ok(())
    }

    /// Complete and partial (staleness `k`) laws at every step of a path.
    pub fn partial_dists(&self, x: &[Symbol], y: &[Symbol], z: Option<&[Symbol]>, k: usize) -> Result<Vec<StepDists>> {
        let path = self.zip_path(x, y, z)?;
        let d = self.order();
        let mut out = Vec::with_capacity(path.len());
        let mut full = self.filter_start()?;
        for (t, &s) in path.iter().enumerate() {
            let complete = if t < d {
                self.filter_predict_x(&full)?
            } else {
                let w = self.encode(&path[t - d..t])?;
                ProbDist::new(self.x_row(w).to_vec())?
            };
            let reference = if t >= d + k {
                let xs = &x[t - k - d..t];
                let ys = &y[t - k - d..t - k];
                let zs = z.map(|z| &z[t - k - d..t]);
                self.true_partial_dist(xs, ys, zs, k)?
            } else {
                self.true_partial_dist_history(&x[..t], &y[..t], z.map(|z| &z[..t]), k)?
            };
            out.push(StepDists { complete, reference });
            if t < d {
                self.filter_update(&mut full, Observation::full(s))?;
            }
        }
        Ok(out)
    }
}

/// True `C(i)` at every step of a path, in bits.
pub fn true_causal_trace(model: &JointMarkovModel, x: &[Symbol], y: &[Symbol], z: Option<&[Symbol]>) -> Result<Vec<f64>> {
    model
        .causal_dists(x, y, z)?
        .iter()
        .map(StepDists::causal_measure)
        .collect()
}

/// True partial measure with staleness `k` at every step of a path, in bits.
pub fn true_partial_causal_trace(
    model: &JointMarkovModel,
    x: &[Symbol],
    y: &[Symbol],
    z: Option<&[Symbol]>,
    k: usize,
) -> Result<Vec<f64>> {
    model
        .partial_dists(x, y, z, k)?
        .iter()
        .map(StepDists::causal_measure)
        .collect()
}
