//! Finite alphabets, symbol sequences, probability vectors and the
//! information-theoretic primitives built on them.
//!
//! All logarithms are base 2, so every quantity is in bits. `0 log 0` is
//! taken to be 0; a zero denominator under a positive numerator is an error,
//! never an infinity.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = usize;

/// Entries of a [`ProbDist`] must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A finite alphabet `{0, 1, ..., size - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::AlphabetTooSmall(size));
        }
        Ok(Alphabet(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn check(self, symbol: Symbol) -> Result<()> {
        if symbol < self.0 {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange { symbol, size: self.0 })
        }
    }

    /// Alphabet of pairs `(a, b)` packed as `a * other + b`.
    pub fn product(self, other: Alphabet) -> Alphabet {
        Alphabet(self.0 * other.0)
    }
}

impl TryFrom<usize> for Alphabet {
    type Error = Error;
    fn try_from(v: usize) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for usize {
    fn from(a: Alphabet) -> usize {
        a.0
    }
}

/// A sequence of symbols over a declared alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSeq {
    alphabet: Alphabet,
    data: Vec<Symbol>,
}

impl SymbolSeq {
    pub fn new(alphabet: Alphabet, data: Vec<Symbol>) -> Result<Self> {
        for &s in &data {
            alphabet.check(s)?;
        }
        Ok(SymbolSeq { alphabet, data })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.data
    }

    /// Sub-sequence over the same alphabet.
    pub fn slice(&self, range: std::ops::Range<usize>) -> SymbolSeq {
        SymbolSeq {
            alphabet: self.alphabet,
            data: self.data[range].to_vec(),
        }
    }
}

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    /// Validates non-negativity and normalization (within [`NORMALIZATION_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::AlphabetTooSmall(probs.len()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(ProbDist { probs })
    }

    /// Normalizes nonnegative weights. Fails when all weights are zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        ProbDist::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let m = alphabet.size();
        ProbDist { probs: vec![1.0 / m as f64; m] }
    }

    /// Point mass on `symbol`.
    pub fn point(alphabet: Alphabet, symbol: Symbol) -> Result<Self> {
        alphabet.check(symbol)?;
        let mut probs = vec![0.0; alphabet.size()];
        probs[symbol] = 1.0;
        Ok(ProbDist { probs })
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.probs.len())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, symbol: Symbol) -> f64 {
        self.probs[symbol]
    }

    /// `log2 p(symbol)`; a zero entry is reported instead of returning `-inf`.
    pub fn log2_prob(&self, symbol: Symbol) -> Result<f64> {
        self.alphabet().check(symbol)?;
        let p = self.probs[symbol];
        if p > 0.0 {
            Ok(p.log2())
        } else {
            Err(Error::ZeroProbability(symbol))
        }
    }

    fn same_alphabet(&self, other: &ProbDist) -> Result<()> {
        if self.probs.len() != other.probs.len() {
            return Err(Error::AlphabetMismatch {
                left: self.probs.len(),
                right: other.probs.len(),
            });
        }
        Ok(())
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::new();
        for v in iter {
            k.add(v);
        }
        k
    }
}

/// `D(p || q) = sum_x p(x) log2(p(x) / q(x))` in bits.
pub fn kl_divergence(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    p.same_alphabet(q)?;
    let mut acc = KahanSum::new();
    for (symbol, (&pp, &qq)) in p.probs.iter().zip(&q.probs).enumerate() {
        if pp == 0.0 {
            continue;
        }
        if qq == 0.0 {
            return Err(Error::NotAbsolutelyContinuous { symbol, mass: pp });
        }
        acc.add(pp * (pp / qq).log2());
    }
    // Rounding can leave a tiny negative residue when p == q.
    Ok(acc.total().max(0.0))
}

/// Shannon entropy in bits.
pub fn entropy(p: &ProbDist) -> f64 {
    p.probs
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .collect::<KahanSum>()
        .total()
        .max(0.0)
}

/// Total variation distance `(1/2) sum |p - q|`.
pub fn total_variation(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    p.same_alphabet(q)?;
    let s: f64 = p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * s).min(1.0))
}

/// Conditional mutual information `I(A; B | C)` in bits from a table of
/// `(probability, a, b, c)` outcomes. Repeated keys are accumulated, so the
/// caller may stream raw joint outcomes and let this marginalize.
pub fn conditional_mutual_information<I>(entries: I) -> f64
where
    I: IntoIterator<Item = (f64, u64, u64, u64)>,
{
    let mut abc: HashMap<(u64, u64, u64), KahanSum> = HashMap::new();
    for (p, a, b, c) in entries {
        if p > 0.0 {
            abc.entry((a, b, c)).or_default().add(p);
        }
    }
    let mut ac: HashMap<(u64, u64), f64> = HashMap::new();
    let mut bc: HashMap<(u64, u64), f64> = HashMap::new();
    let mut cc: HashMap<u64, f64> = HashMap::new();
    for (&(a, b, c), p) in &abc {
        let p = p.total();
        *ac.entry((a, c)).or_default() += p;
        *bc.entry((b, c)).or_default() += p;
        *cc.entry(c).or_default() += p;
    }
    // Deterministic summation order.
    let mut keys: Vec<_> = abc.keys().copied().collect();
    keys.sort_unstable();
    let mut acc = KahanSum::new();
    for key @ (a, b, c) in keys {
        let p = abc[&key].total();
        if p <= 0.0 {
            continue;
        }
        acc.add(p * (p * cc[&c] / (ac[&(a, c)] * bc[&(b, c)])).log2());
    }
    acc.total().max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pd(v: &[f64]) -> ProbDist {
        ProbDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&pd(&[0.3, 0.7]), &pd(&[0.3, 0.7])).unwrap(), 0.0);
        // 0.5*log2(2) + 0.5*log2(2/3)
        let expected = 0.5 + 0.5 * (2.0f64 / 3.0).log2();
        let got = kl_divergence(&pd(&[0.5, 0.5]), &pd(&[0.25, 0.75])).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.2075).abs() < 5e-5);
        assert!((kl_divergence(&pd(&[1.0, 0.0]), &pd(&[0.5, 0.5])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kl_errors() {
        let err = kl_divergence(&pd(&[0.5, 0.5]), &pd(&[1.0, 0.0])).unwrap_err();
        assert_eq!(err, Error::NotAbsolutelyContinuous { symbol: 1, mass: 0.5 });
        assert!(err.is_numerical());
        let err = kl_divergence(&pd(&[0.5, 0.5]), &pd(&[0.2, 0.3, 0.5])).unwrap_err();
        assert!(matches!(err, Error::AlphabetMismatch { .. }));
    }

    #[test]
    fn entropy_examples() {
        let four = ProbDist::uniform(Alphabet::new(4).unwrap());
        assert!((entropy(&four) - 2.0).abs() < 1e-15);
        assert_eq!(entropy(&pd(&[1.0, 0.0, 0.0])), 0.0);
        let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((entropy(&pd(&[0.25, 0.75])) - h).abs() < 1e-15);
        assert!((h - 0.8113).abs() < 5e-5);
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&pd(&[0.2, 0.8]), &pd(&[0.2, 0.8])).unwrap(), 0.0);
        assert_eq!(total_variation(&pd(&[1.0, 0.0]), &pd(&[0.0, 1.0])).unwrap(), 1.0);
        assert!((total_variation(&pd(&[0.5, 0.5]), &pd(&[0.25, 0.75])).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(ProbDist::new(vec![0.5, 0.6]).is_err());
        assert!(ProbDist::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbDist::new(vec![1.0]).is_err());
        assert!(ProbDist::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        let p = pd(&[1.0, 0.0]);
        assert_eq!(p.log2_prob(1), Err(Error::ZeroProbability(1)));
        assert_eq!(p.log2_prob(0), Ok(0.0));
        assert!(Alphabet::new(1).is_err());
        assert!(SymbolSeq::new(Alphabet::new(2).unwrap(), vec![0, 1, 2]).is_err());
    }

    #[test]
    fn cmi_of_independent_and_copied_bits() {
        // A, B independent fair bits, C constant.
        let indep = (0..4u64).map(|v| (0.25, v & 1, v >> 1, 0));
        assert!(conditional_mutual_information(indep) < 1e-15);
        // B = A: one bit of information.
        let copy = (0..2u64).map(|a| (0.5, a, a, 0));
        assert!((conditional_mutual_information(copy) - 1.0).abs() < 1e-15);
        // B = A xor C with C known: still one bit.
        let xor = (0..4u64).map(|v| (0.25, v & 1, (v & 1) ^ (v >> 1), v >> 1));
        assert!((conditional_mutual_information(xor) - 1.0).abs() < 1e-15);
    }

    fn dist_strategy(m: usize) -> impl Strategy<Value = ProbDist> {
        proptest::collection::vec(0.0f64..1.0, m)
            .prop_filter("nonzero", |w| w.iter().sum::<f64>() > 1e-3)
            .prop_map(|w| ProbDist::from_weights(w).unwrap())
    }

    fn positive_dist_strategy(m: usize) -> impl Strategy<Value = ProbDist> {
        proptest::collection::vec(0.01f64..1.0, m).prop_map(|w| ProbDist::from_weights(w).unwrap())
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_zero_iff_equal(p in dist_strategy(4), q in positive_dist_strategy(4)) {
            let d = kl_divergence(&p, &q).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(kl_divergence(&q, &q).unwrap() <= 1e-12);
            if total_variation(&p, &q).unwrap() > 1e-3 {
                prop_assert!(d > 1e-12);
            }
        }

        #[test]
        fn pinsker_in_bits(p in dist_strategy(3), q in positive_dist_strategy(3)) {
            // TV <= sqrt(D_nats / 2), with D_nats = D_bits * ln 2.
            let tv = total_variation(&p, &q).unwrap();
            let d_bits = kl_divergence(&p, &q).unwrap();
            prop_assert!(tv <= (d_bits * std::f64::consts::LN_2 / 2.0).sqrt() + 1e-12);
        }

        #[test]
        fn entropy_concave_and_bounded(p in dist_strategy(5), q in dist_strategy(5)) {
            let mid = ProbDist::from_weights(
                p.probs().iter().zip(q.probs()).map(|(a, b)| 0.5 * (a + b)).collect()
            ).unwrap();
            prop_assert!(entropy(&mid) + 1e-12 >= 0.5 * (entropy(&p) + entropy(&q)));
            prop_assert!(entropy(&p) <= 5f64.log2() + 1e-12);
        }
    }
}
