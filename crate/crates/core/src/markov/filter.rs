//! Forward filtering over lifted windows with partially observed symbols.
//!
//! The state is the posterior over the current `d`-window given everything
//! observed so far. Before `d` symbols have been seen it is instead the
//! posterior over the initial window, conditioned by masking.

use crate::error::{Error, Result};
use crate::info::{ProbDist, Symbol};

use super::{JointMarkovModel, JointSymbol};

/// Which components of one joint symbol were seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Observation {
    pub x: Option<Symbol>,
    pub y: Option<Symbol>,
    pub z: Option<Symbol>,
}

impl Observation {
    pub fn full(s: JointSymbol) -> Self {
        Observation {
            x: Some(s.x),
            y: Some(s.y),
            z: Some(s.z),
        }
    }

    /// Everything but `y`.
    pub fn hide_y(s: JointSymbol) -> Self {
        Observation {
            x: Some(s.x),
            y: None,
            z: Some(s.z),
        }
    }

    pub fn matches(&self, s: JointSymbol) -> bool {
        self.x.is_none_or(|v| v == s.x) && self.y.is_none_or(|v| v == s.y) && self.z.is_none_or(|v| v == s.z)
    }
}

/// Posterior over lifted windows after `time` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    posterior: Vec<f64>,
    time: usize,
}

impl FilterState {
    pub fn time(&self) -> usize {
        self.time
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }
}

impl JointMarkovModel {
    /// Filter at time 0: the initial window law.
    pub fn filter_start(&self) -> Result<FilterState> {
        Ok(FilterState {
            posterior: self.initial()?.to_vec(),
            time: 0,
        })
    }

    /// Filter that knows the window `s_{t-d} .. s_{t-1}` exactly, at time `t >= d`.
    pub fn filter_at_window(&self, window: &[JointSymbol], time: usize) -> Result<FilterState> {
        let w = self.encode(window)?;
        let mut posterior = vec![0.0; self.window_count()];
        posterior[w] = 1.0;
        Ok(FilterState {
            posterior,
            time: time.max(self.order),
        })
    }

    /// Predictive law of the next joint symbol (index by [`joint_index`](Self::joint_index)).
    pub fn filter_predict_joint(&self, state: &FilterState) -> Vec<f64> {
        let j = self.joint_size();
        let mut out = vec![0.0; j];
        if state.time < self.order {
            for (w, &p) in state.posterior.iter().enumerate() {
                if p > 0.0 {
                    out[self.symbol_in_window(w, state.time)] += p;
                }
            }
        } else {
            for (w, &p) in state.posterior.iter().enumerate() {
                if p > 0.0 {
                    for (s, o) in out.iter_mut().enumerate() {
                        *o += p * self.transition(w, s);
                    }
                }
            }
        }
        out
    }

    /// Predictive law of the next `X` symbol.
    pub fn filter_predict_x(&self, state: &FilterState) -> Result<ProbDist> {
        let mut out = vec![0.0; self.x.size()];
        if state.time < self.order {
            for (w, &p) in state.posterior.iter().enumerate() {
                if p > 0.0 {
                    out[self.joint_symbol(self.symbol_in_window(w, state.time)).x] += p;
                }
            }
        } else {
            for (w, &p) in state.posterior.iter().enumerate() {
                if p > 0.0 {
                    for (o, &r) in out.iter_mut().zip(self.x_row(w)) {
                        *o += p * r;
                    }
                }
            }
        }
        ProbDist::from_weights(out)
    }

    /// Conditions on `obs` as the next symbol. Returns its predictive
    /// probability `p(obs_t | past)`.
    pub fn filter_update(&self, state: &mut FilterState, obs: Observation) -> Result<f64> {
        let j = self.joint_size();
        let allowed: Vec<usize> = (0..j).filter(|&s| obs.matches(self.joint_symbol(s))).collect();
        let mut next = vec![0.0; self.window_count()];
        if state.time < self.order {
            for (w, &p) in state.posterior.iter().enumerate() {
                if p > 0.0 && allowed.contains(&self.symbol_in_window(w, state.time)) {
                    next[w] = p;
                }
            }
        } else {
            for (w, &p) in state.posterior.iter().enumerate() {
                if p > 0.0 {
                    for &s in &allowed {
                        let t = self.transition(w, s);
                        if t > 0.0 {
                            next[self.shift(w, s)] += p * t;
                        }
                    }
                }
            }
        }
        let norm: f64 = next.iter().sum();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroProbabilityObservation(state.time));
        }
        for v in &mut next {
            *v /= norm;
        }
        state.posterior = next;
        state.time += 1;
        Ok(norm)
    }

    /// Joint index of the symbol at position `t` (0 = oldest) of window `w`.
    fn symbol_in_window(&self, w: usize, t: usize) -> usize {
        let j = self.joint_size();
        (w / j.pow((self.order - 1 - t) as u32)) % j
    }
}

/// Restricted-distribution filter: tracks `p(x_i | x^{i-1}[, z^{i-1}])` with
/// `Y` marginalized out by Bayes recursion.
#[derive(Debug, Clone)]
pub struct RestrictedFilter<'a> {
    model: &'a JointMarkovModel,
    state: FilterState,
}

impl<'a> RestrictedFilter<'a> {
    pub fn new(model: &'a JointMarkovModel) -> Result<Self> {
        Ok(RestrictedFilter {
            model,
            state: model.filter_start()?,
        })
    }

    /// Law of the next `X` given what has been revealed.
    pub fn dist(&self) -> Result<ProbDist> {
        self.model.filter_predict_x(&self.state)
    }

    /// Reveals the next `x` (and `z`, for models with a third process).
    pub fn observe(&mut self, x: Symbol, z: Option<Symbol>) -> Result<()> {
        let z = match (self.model.has_z(), z) {
            (true, None) => return Err(Error::InvalidParameter("model has a z process; z symbol required".into())),
            (true, Some(z)) => z,
            (false, _) => 0,
        };
        let obs = Observation {
            x: Some(x),
            y: None,
            z: Some(z),
        };
        self.model.filter_update(&mut self.state, obs).map(|_| ())
    }

    /// One step of the recursion: the current law, then the update with `x`.
    pub fn step(&mut self, x: Symbol, z: Option<Symbol>) -> Result<ProbDist> {
        let d = self.dist()?;
        self.observe(x, z)?;
        Ok(d)
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }
}
