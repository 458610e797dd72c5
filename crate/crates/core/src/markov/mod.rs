//! Jointly Markov ground truth.
//!
//! A [`JointMarkovModel`] of order `d` draws the next joint symbol
//! `(X_i, Y_i[, Z_i])` from a product of per-process rows indexed by the last
//! `d` joint symbols, so there is no instantaneous coupling. Higher orders are
//! handled by lifting to a first-order chain over `d`-windows.
//!
//! Windows are encoded in base `J = |X||Y||Z|`, oldest symbol most
//! significant; the joint symbol index is `x |Y||Z| + y |Z| + z` (with
//! `|Z| = 1` when there is no third process).

mod file;
mod filter;
mod oracle;
mod rates;
mod stationary;

pub use file::{ModelFile, RowSpec, InitialSpec};
pub use filter::{FilterState, Observation, RestrictedFilter};
pub use oracle::{
    brute_predict_x, true_causal_trace, true_partial_causal_trace, true_restricted_brute, StepDists,
};
pub use rates::{exact_pdi_rate, exact_tdi_rate, mc_di_rate, McEstimate};
pub use stationary::{path_distribution, stationary_distribution, stationary_path_distribution, StationaryDist};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{Alphabet, ProbDist, Symbol, SymbolSeq};

/// Largest lifted state space a model may have.
pub const MAX_WINDOWS: usize = 1 << 20;

/// One joint time step. `z` is 0 when the model has no third process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct JointSymbol {
    pub x: Symbol,
    pub y: Symbol,
    pub z: Symbol,
}

impl JointSymbol {
    pub fn xy(x: Symbol, y: Symbol) -> Self {
        JointSymbol { x, y, z: 0 }
    }
}

/// Per-window conditional rows returned by a kernel closure.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRows {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Empty when the model has no third process.
    pub z: Vec<f64>,
}

/// Where the initial window law came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLaw {
    Stationary,
    /// User-supplied; simulations are not guaranteed to be stationary.
    Custom,
}

/// A simulated joint path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub x: SymbolSeq,
    pub y: SymbolSeq,
    pub z: Option<SymbolSeq>,
}

#[derive(Debug, Clone)]
pub struct JointMarkovModel {
    order: usize,
    x: Alphabet,
    y: Alphabet,
    z: Option<Alphabet>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kz: Vec<f64>,
    initial: Option<Vec<f64>>,
    initial_law: InitialLaw,
    stationary: std::result::Result<StationaryDist, Error>,
}

impl JointMarkovModel {
    /// Builds a model from a closure giving the rows for each window
    /// (oldest symbol first). The initial law defaults to the stationary one.
    pub fn from_fn<F>(order: usize, x: Alphabet, y: Alphabet, z: Option<Alphabet>, mut rows: F) -> Result<Self>
    where
        F: FnMut(&[JointSymbol]) -> KernelRows,
    {
        if order == 0 {
            return Err(Error::InvalidParameter("model order must be at least 1".into()));
        }
        let mz = z.map_or(1, |a| a.size());
        let joint = x.size() * y.size() * mz;
        let windows = joint
            .checked_pow(order as u32)
            .filter(|&w| w <= MAX_WINDOWS)
            .ok_or_else(|| Error::InstanceTooLarge(format!("{joint}^{order} lifted states")))?;
        let mut model = JointMarkovModel {
            order,
            x,
            y,
            z,
            kx: Vec::with_capacity(windows * x.size()),
            ky: Vec::with_capacity(windows * y.size()),
            kz: Vec::with_capacity(windows * mz),
            initial: None,
            initial_law: InitialLaw::Stationary,
            stationary: Err(Error::NonErgodic("not computed".into())),
        };
        for w in 0..windows {
            let win = model.decode(w);
            let r = rows(&win);
            let check = |v: &[f64], a: usize, what: &str| -> Result<()> {
                if v.len() != a {
                    return Err(Error::InvalidDistribution(format!(
                        "{what} row for window {win:?} has {} entries, expected {a}",
                        v.len()
                    )));
                }
                ProbDist::new(v.to_vec())
                    .map_err(|e| Error::InvalidDistribution(format!("{what} row for window {win:?}: {e}")))?;
                Ok(())
            };
            check(&r.x, x.size(), "x")?;
            check(&r.y, y.size(), "y")?;
            match z {
                Some(za) => check(&r.z, za.size(), "z")?,
                None if !r.z.is_empty() => {
                    return Err(Error::InvalidDistribution("z row given for a model without z".into()))
                }
                None => {}
            }
            model.kx.extend_from_slice(&r.x);
            model.ky.extend_from_slice(&r.y);
            if z.is_some() {
                model.kz.extend_from_slice(&r.z);
            } else {
                model.kz.push(1.0);
            }
        }
        model.stationary = stationary_distribution(&model);
        if let Ok(pi) = &model.stationary {
            model.initial = Some(pi.probs().to_vec());
        }
        Ok(model)
    }

    /// Two-process model from `(x row, y row)` per window.
    pub fn from_xy_fn<F>(order: usize, x: Alphabet, y: Alphabet, mut rows: F) -> Result<Self>
    where
        F: FnMut(&[JointSymbol]) -> (Vec<f64>, Vec<f64>),
    {
        Self::from_fn(order, x, y, None, |w| {
            let (rx, ry) = rows(w);
            KernelRows { x: rx, y: ry, z: Vec::new() }
        })
    }

    /// Replaces the initial window law. Required for non-ergodic models.
    pub fn with_initial(mut self, initial: Vec<f64>) -> Result<Self> {
        if initial.len() != self.window_count() {
            return Err(Error::WindowLength {
                expected: self.window_count(),
                got: initial.len(),
            });
        }
        ProbDist::new(initial.clone())?;
        self.initial = Some(initial);
        self.initial_law = InitialLaw::Custom;
        Ok(self)
    }

    /// Product law: each of the first `d` joint symbols uniform and independent.
    pub fn with_uniform_initial(self) -> Result<Self> {
        let w = self.window_count();
        self.with_initial(vec![1.0 / w as f64; w])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn x_alphabet(&self) -> Alphabet {
        self.x
    }

    pub fn y_alphabet(&self) -> Alphabet {
        self.y
    }

    pub fn z_alphabet(&self) -> Option<Alphabet> {
        self.z
    }

    pub fn has_z(&self) -> bool {
        self.z.is_some()
    }

    fn mz(&self) -> usize {
        self.z.map_or(1, |a| a.size())
    }

    /// Joint alphabet size `J`.
    pub fn joint_size(&self) -> usize {
        self.x.size() * self.y.size() * self.mz()
    }

    /// Lifted state count `J^d`.
    pub fn window_count(&self) -> usize {
        self.joint_size().pow(self.order as u32)
    }

    pub fn initial_law(&self) -> InitialLaw {
        self.initial_law
    }

    /// Initial window law; errors for a non-ergodic model without a custom one.
    pub fn initial(&self) -> Result<&[f64]> {
        match &self.initial {
            Some(v) => Ok(v),
            None => Err(self.stationary.clone().err().unwrap_or_else(|| Error::NonErgodic("no initial law".into()))),
        }
    }

    pub fn stationary(&self) -> Result<&StationaryDist> {
        self.stationary.as_ref().map_err(Clone::clone)
    }

    pub fn joint_index(&self, s: JointSymbol) -> usize {
        (s.x * self.y.size() + s.y) * self.mz() + s.z
    }

    pub fn joint_symbol(&self, idx: usize) -> JointSymbol {
        let mz = self.mz();
        let z = idx % mz;
        let rest = idx / mz;
        JointSymbol {
            x: rest / self.y.size(),
            y: rest % self.y.size(),
            z,
        }
    }

    pub fn encode(&self, window: &[JointSymbol]) -> Result<usize> {
        if window.len() != self.order {
            return Err(Error::WindowLength {
                expected: self.order,
                got: window.len(),
            });
        }
        let mut w = 0;
        for &s in window {
            self.x.check(s.x)?;
            self.y.check(s.y)?;
            if s.z >= self.mz() {
                return Err(Error::SymbolOutOfRange { symbol: s.z, size: self.mz() });
            }
            w = w * self.joint_size() + self.joint_index(s);
        }
        Ok(w)
    }

    pub fn decode(&self, mut w: usize) -> Vec<JointSymbol> {
        let j = self.joint_size();
        let mut out = vec![JointSymbol::xy(0, 0); self.order];
        for slot in out.iter_mut().rev() {
            *slot = self.joint_symbol(w % j);
            w /= j;
        }
        out
    }

    /// Window after appending joint symbol index `s`.
    pub fn shift(&self, w: usize, s: usize) -> usize {
        let j = self.joint_size();
        (w % j.pow(self.order as u32 - 1)) * j + s
    }

    pub fn x_row(&self, w: usize) -> &[f64] {
        let m = self.x.size();
        &self.kx[w * m..(w + 1) * m]
    }

    pub fn y_row(&self, w: usize) -> &[f64] {
        let m = self.y.size();
        &self.ky[w * m..(w + 1) * m]
    }

    pub fn z_row(&self, w: usize) -> &[f64] {
        let m = self.mz();
        &self.kz[w * m..(w + 1) * m]
    }

    /// `P(next joint symbol = s | window w)`.
    pub fn transition(&self, w: usize, s: usize) -> f64 {
        let j = self.joint_symbol(s);
        self.x_row(w)[j.x] * self.y_row(w)[j.y] * self.z_row(w)[j.z]
    }

    /// Complete conditional law of `X_i` given the last `d` `(x, y)` pairs.
    pub fn true_complete_dist(&self, window: &[(Symbol, Symbol)]) -> Result<ProbDist> {
        if self.has_z() {
            return Err(Error::InvalidParameter("model has a z process; use complete_row".into()));
        }
        let win: Vec<JointSymbol> = window.iter().map(|&(x, y)| JointSymbol::xy(x, y)).collect();
        self.complete_row(&win)
    }

    /// Complete conditional law of `X_i` given the last `d` joint symbols.
    pub fn complete_row(&self, window: &[JointSymbol]) -> Result<ProbDist> {
        let w = self.encode(window)?;
        ProbDist::new(self.x_row(w).to_vec())
    }

    /// The same dynamics with the roles of `X` and `Y` exchanged.
    pub fn swap_xy(&self) -> Result<Self> {
        let swapped = Self::from_fn(self.order, self.y, self.x, self.z, |win| {
            let orig: Vec<JointSymbol> = win.iter().map(|s| JointSymbol { x: s.y, y: s.x, z: s.z }).collect();
            let w = self.encode(&orig).expect("window re-encoding");
            KernelRows {
                x: self.y_row(w).to_vec(),
                y: self.x_row(w).to_vec(),
                z: if self.has_z() { self.z_row(w).to_vec() } else { Vec::new() },
            }
        })?;
        if self.initial_law == InitialLaw::Custom {
            let init = self.initial()?;
            let mut v = vec![0.0; swapped.window_count()];
            for (w, slot) in v.iter_mut().enumerate() {
                let win: Vec<JointSymbol> = swapped
                    .decode(w)
                    .iter()
                    .map(|s| JointSymbol { x: s.y, y: s.x, z: s.z })
                    .collect();
                *slot = init[self.encode(&win)?];
            }
            return swapped.with_initial(v);
        }
        Ok(swapped)
    }

    /// Seeded sample path of length `n`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Trajectory> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = self.initial()?;
        let mut w = sample(init, &mut rng);
        let mut joint: Vec<JointSymbol> = self.decode(w);
        joint.truncate(n);
        while joint.len() < n {
            let (xr, yr, zr) = (self.x_row(w), self.y_row(w), self.z_row(w));
            let x = sample(xr, &mut rng);
            let y = sample(yr, &mut rng);
            let z = sample(zr, &mut rng);
            let s = JointSymbol { x, y, z };
            w = self.shift(w, self.joint_index(s));
            joint.push(s);
        }
        let xs = SymbolSeq::new(self.x, joint.iter().map(|s| s.x).collect())?;
        let ys = SymbolSeq::new(self.y, joint.iter().map(|s| s.y).collect())?;
        let zs = match self.z {
            Some(za) => Some(SymbolSeq::new(za, joint.iter().map(|s| s.z).collect())?),
            None => None,
        };
        Ok(Trajectory { x: xs, y: ys, z: zs })
    }

    /// Joint symbols of a path given as separate component sequences.
    pub fn zip_path(&self, x: &[Symbol], y: &[Symbol], z: Option<&[Symbol]>) -> Result<Vec<JointSymbol>> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
        }
        if let Some(z) = z {
            if z.len() != x.len() {
                return Err(Error::LengthMismatch { left: x.len(), right: z.len() });
            }
        }
        if z.is_some() != self.has_z() {
            return Err(Error::InvalidParameter("z sequence presence does not match the model".into()));
        }
        let mut out = Vec::with_capacity(x.len());
        for t in 0..x.len() {
            let s = JointSymbol {
                x: x[t],
                y: y[t],
                z: z.map_or(0, |z| z[t]),
            };
            self.x.check(s.x)?;
            self.y.check(s.y)?;
            if s.z >= self.mz() {
                return Err(Error::SymbolOutOfRange { symbol: s.z, size: self.mz() });
            }
            out.push(s);
        }
        Ok(out)
    }
}

/// Inverse-CDF draw from a probability vector.
fn sample<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left the total a hair under one: take the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
