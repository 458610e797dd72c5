//! The estimator pipeline: per-step causal measure from two sequential CTW
//! predictors, its partial (stale side information) variant, the c-vector,
//! causality-regret bounds, and trace export.
//!
//! At step `i` both predictors forecast `x_i` from the past only; the
//! estimate is `D(p_complete || p_reference)`. Then both observe `x_i`.
//! Rows are numbered from 1. Cumulative error and bound columns are sums;
//! normalized views divide both by the step count `n`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::ctw::{ContextSchema, ContextTree, RegretBudget};
use crate::error::{Error, Result};
use crate::info::{kl_divergence, Alphabet, KahanSum, ProbDist, Symbol, SymbolSeq};

/// Which way influence is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// Influence of `Y` on `X`.
    #[serde(rename = "yx")]
    YToX,
    /// Influence of `X` on `Y`.
    #[serde(rename = "xy")]
    XToY,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::YToX => "yx",
            Direction::XToY => "xy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    /// Context depth `d` of both predictors.
    pub depth: usize,
    /// Most recent side symbols withheld from the partial reference predictor.
    pub staleness: usize,
    pub target_alphabet: Alphabet,
    pub side_alphabet: Alphabet,
    /// Alphabet of a third process both predictors condition on.
    pub cond_alphabet: Option<Alphabet>,
    /// Label only: callers pass the target sequence as `x` either way.
    pub direction: Direction,
    /// Keep both predictive laws for every step.
    pub keep_snapshots: bool,
}

impl EstimatorConfig {
    pub fn new(depth: usize, target: Alphabet, side: Alphabet) -> Self {
        EstimatorConfig {
            depth,
            staleness: 1,
            target_alphabet: target,
            side_alphabet: side,
            cond_alphabet: None,
            direction: Direction::YToX,
            keep_snapshots: false,
        }
    }

    pub fn with_staleness(mut self, k: usize) -> Self {
        self.staleness = k;
        self
    }

    pub fn with_conditioning(mut self, z: Alphabet) -> Self {
        self.cond_alphabet = Some(z);
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_snapshots(mut self, keep: bool) -> Self {
        self.keep_snapshots = keep;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        Ok(())
    }

    fn target_context(&self) -> Alphabet {
        match self.cond_alphabet {
            Some(z) => self.target_alphabet.product(z),
            None => self.target_alphabet,
        }
    }

    /// Schema of the predictor that sees the side process.
    pub fn complete_schema(&self) -> ContextSchema {
        ContextSchema::with_side(self.target_alphabet, self.side_alphabet, self.depth, 0)
            .with_target_context(self.target_context())
    }

    /// Schema of the predictor that sees only the target (and conditioning) past.
    pub fn restricted_schema(&self) -> ContextSchema {
        ContextSchema::plain(self.target_alphabet, self.depth).with_target_context(self.target_context())
    }

    /// Schema of the partial reference for a sequence of length `n`. When the
    /// withheld window covers the whole sequence no side symbol is ever
    /// visible, and the restricted schema is used instead.
    pub fn stale_schema(&self, n: usize) -> ContextSchema {
        if self.staleness + 1 >= n {
            self.restricted_schema()
        } else {
            ContextSchema::with_side(self.target_alphabet, self.side_alphabet, self.depth, self.staleness)
                .with_target_context(self.target_context())
        }
    }
}

/// What the reference predictor in a trace was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Restricted,
    Partial { staleness: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMeta {
    pub config: EstimatorConfig,
    pub reference: ReferenceKind,
    pub n: usize,
    pub complete_leaves: u64,
    pub complete_nodes: u64,
    pub reference_leaves: u64,
    pub reference_nodes: u64,
    /// Steps with incomplete contexts; summaries usually skip them.
    pub warm_up: usize,
    /// Steps where the complete predictor's regret bound was below 1 bit,
    /// outside the regime the causality-regret bound is stated for.
    pub bound_regime_flags: usize,
    pub seed: Option<u64>,
    pub normalization: &'static str,
    pub units: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub i: usize,
    pub estimate_bits: f64,
    pub truth_bits: Option<f64>,
    pub c_i: f64,
    pub cum_estimate: f64,
    pub cum_abs_err: Option<f64>,
    pub cum_bound: Option<f64>,
}

/// Both predictive laws at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub complete: ProbDist,
    pub reference: ProbDist,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalTrace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
    #[serde(skip)]
    pub snapshots: Option<Vec<Snapshot>>,
}

impl CausalTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimate_bits).collect()
    }

    pub fn has_truth(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.truth_bits.is_some())
    }
}

/// `Ĉ(i)` for influence of `y` on `x`: complete (pair-context) predictor
/// against restricted (target-only) predictor.
pub fn estimate_causal_trace(x: &SymbolSeq, y: &SymbolSeq, config: &EstimatorConfig) -> Result<CausalTrace> {
    run(x, y, None, config, false)
}

/// As [`estimate_causal_trace`], with both predictors also conditioning on `z`.
pub fn estimate_causal_trace_with(
    x: &SymbolSeq,
    y: &SymbolSeq,
    z: &SymbolSeq,
    config: &EstimatorConfig,
) -> Result<CausalTrace> {
    run(x, y, Some(z), config, false)
}

/// Partial causal measure: complete predictor against one whose side
/// context withholds the `config.staleness` most recent `y` symbols.
pub fn estimate_partial_trace(x: &SymbolSeq, y: &SymbolSeq, config: &EstimatorConfig) -> Result<CausalTrace> {
    run(x, y, None, config, true)
}

/// As [`estimate_partial_trace`] with a conditioning process `z`.
pub fn estimate_partial_trace_with(
    x: &SymbolSeq,
    y: &SymbolSeq,
    z: &SymbolSeq,
    config: &EstimatorConfig,
) -> Result<CausalTrace> {
    run(x, y, Some(z), config, true)
}

fn check_alphabet(seq: &SymbolSeq, want: Alphabet) -> Result<()> {
    if seq.alphabet() != want {
        return Err(Error::AlphabetMismatch {
            left: seq.alphabet().size(),
            right: want.size(),
        });
    }
    Ok(())
}

fn run(x: &SymbolSeq, y: &SymbolSeq, z: Option<&SymbolSeq>, config: &EstimatorConfig, partial: bool) -> Result<CausalTrace> {
    config.validate()?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    check_alphabet(x, config.target_alphabet)?;
    check_alphabet(y, config.side_alphabet)?;
    match (z, config.cond_alphabet) {
        (Some(z), Some(za)) => {
            if z.len() != x.len() {
                return Err(Error::LengthMismatch { left: x.len(), right: z.len() });
            }
            check_alphabet(z, za)?;
        }
        (None, None) => {}
        _ => return Err(Error::InvalidParameter("conditioning sequence and config disagree".into())),
    }
    let n = x.len();
    let target_ctx: Vec<Symbol> = match (z, config.cond_alphabet) {
        (Some(z), Some(za)) => x
            .as_slice()
            .iter()
            .zip(z.as_slice())
            .map(|(&a, &b)| a * za.size() + b)
            .collect(),
        _ => x.as_slice().to_vec(),
    };
    let complete_schema = config.complete_schema();
    let (reference_schema, reference) = if partial {
        (config.stale_schema(n), ReferenceKind::Partial { staleness: config.staleness })
    } else {
        (config.restricted_schema(), ReferenceKind::Restricted)
    };
    let mut complete = ContextTree::new(complete_schema);
    let mut restricted = ContextTree::new(reference_schema);
    let side = Some(y.as_slice());
    let reference_side = reference_schema.side().map(|_| y.as_slice());

    let mut rows = Vec::with_capacity(n);
    let mut snapshots = config.keep_snapshots.then(|| Vec::with_capacity(n));
    let mut cum = KahanSum::new();
    let mut c_sq = KahanSum::new();
    let mut flags = 0;
    let mc_budget = RegretBudget::for_schema(&complete_schema, complete_schema.leaf_count().max(1));
    let mr_budget = RegretBudget::for_schema(&reference_schema, reference_schema.leaf_count().max(1));
    for i in 0..n {
        let cc = complete_schema.context(i, &target_ctx, side)?;
        let rc = reference_schema.context(i, &target_ctx, reference_side)?;
        let pc = complete.predict(&cc)?;
        let pr = restricted.predict(&rc)?;
        let est = kl_divergence(&pc, &pr)?;
        let ci = c_term(&pc, &pr);
        cum.add(est);
        c_sq.add(ci * ci);
        let horizon = (i + 1) as u64;
        let cum_bound = match (&mc_budget, &mr_budget) {
            (Ok(mc), Ok(mr)) => match (mc.at(horizon), mr.at(horizon)) {
                (Ok(mc), Ok(mr)) => {
                    let b = causality_regret_bound(mc.bound_bits.max(0.0), mr.bound_bits.max(0.0), c_sq.total().sqrt())?;
                    if b.mc_below_one {
                        flags += 1;
                    }
                    Some(b.bits)
                }
                _ => None,
            },
            _ => None,
        };
        rows.push(TraceRow {
            i: i + 1,
            estimate_bits: est,
            truth_bits: None,
            c_i: ci,
            cum_estimate: cum.total(),
            cum_abs_err: None,
            cum_bound,
        });
        if let Some(s) = snapshots.as_mut() {
            s.push(Snapshot { complete: pc, reference: pr });
        }
        complete.observe(&cc, x.as_slice()[i])?;
        restricted.observe(&rc, x.as_slice()[i])?;
    }
    let meta = TraceMeta {
        config: config.clone(),
        reference,
        n,
        complete_leaves: complete_schema.leaf_count(),
        complete_nodes: complete_schema.node_count(),
        reference_leaves: reference_schema.leaf_count(),
        reference_nodes: reference_schema.node_count(),
        warm_up: reference_schema.total_depth().max(complete_schema.total_depth()),
        bound_regime_flags: flags,
        seed: None,
        normalization: "cumulative error and bound are divided by the step count n in normalized views",
        units: "bits",
    };
    Ok(CausalTrace { meta, rows, snapshots })
}

/// `sum_x |log2(p(x) / q(x))|`; both laws must be strictly positive.
fn c_term(p: &ProbDist, q: &ProbDist) -> f64 {
    p.probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a / b).log2().abs())
        .sum()
}

/// Per-step `c_i` recomputed from retained snapshots, and `||c_n||_2`.
pub fn c_vector(trace: &CausalTrace) -> Result<(Vec<f64>, f64)> {
    let snaps = trace.snapshots.as_ref().ok_or(Error::MissingSnapshots)?;
    let c: Vec<f64> = snaps.iter().map(|s| c_term(&s.complete, &s.reference)).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((c, norm))
}

/// `c_i` for one pair of laws.
pub fn c_value(complete: &ProbDist, reference: &ProbDist) -> Result<f64> {
    if complete.alphabet() != reference.alphabet() {
        return Err(Error::AlphabetMismatch {
            left: complete.alphabet().size(),
            right: reference.alphabet().size(),
        });
    }
    for (sym, (&a, &b)) in complete.probs().iter().zip(reference.probs()).enumerate() {
        if a == 0.0 || b == 0.0 {
            return Err(Error::ZeroProbability(sym));
        }
    }
    Ok(c_term(complete, reference))
}

/// A causality-regret bound value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub bits: f64,
    /// The complete predictor's regret was below 1 bit, outside the regime
    /// the bound is derived for.
    pub mc_below_one: bool,
}

/// `Mc + Mr + (||c||_2 / sqrt 2) sqrt(Mc)`.
pub fn causality_regret_bound(mc: f64, mr: f64, c_norm: f64) -> Result<BoundValue> {
    for (name, v) in [("Mc", mc), ("Mr", mr), ("c_norm", c_norm)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!("{name} must be a nonnegative number, got {v}")));
        }
    }
    Ok(BoundValue {
        bits: mc + mr + c_norm / std::f64::consts::SQRT_2 * mc.sqrt(),
        mc_below_one: mc < 1.0,
    })
}

/// Fills `truth_bits` and `cum_abs_err` from a true per-step measure.
pub fn attach_truth(trace: &mut CausalTrace, truth: &[f64]) -> Result<()> {
    if truth.len() != trace.rows.len() {
        return Err(Error::LengthMismatch {
            left: trace.rows.len(),
            right: truth.len(),
        });
    }
    let mut err = KahanSum::new();
    for (row, &t) in trace.rows.iter_mut().zip(truth) {
        err.add((row.estimate_bits - t).abs());
        row.truth_bits = Some(t);
        row.cum_abs_err = Some(err.total());
    }
    Ok(())
}

/// Running `CR(n) = sum_i |Ĉ(i) - C(i)|`.
pub fn realized_causality_regret(trace: &CausalTrace) -> Result<Vec<f64>> {
    let mut err = KahanSum::new();
    trace
        .rows
        .iter()
        .map(|r| {
            let t = r.truth_bits.ok_or(Error::TruthMissing)?;
            err.add((r.estimate_bits - t).abs());
            Ok(err.total())
        })
        .collect()
}

/// `(1/n) sum Ĉ(i)`.
pub fn plug_in_di_rate(trace: &CausalTrace) -> f64 {
    if trace.rows.is_empty() {
        return 0.0;
    }
    trace.rows.last().map_or(0.0, |r| r.cum_estimate) / trace.rows.len() as f64
}

/// Mean estimate over rows `i > skip`.
pub fn mean_estimate_after(trace: &CausalTrace, skip: usize) -> f64 {
    let tail = &trace.rows[skip.min(trace.rows.len())..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().map(|r| r.estimate_bits).collect::<KahanSum>().total() / tail.len() as f64
}

/// Aggregate of the trace over steps sharing a state key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateStat {
    pub count: usize,
    pub percent: f64,
    pub mean_estimate: f64,
    pub mean_truth: Option<f64>,
}

/// Groups rows `i > skip` by `key(index)` (0-based row index) and averages.
pub fn summarize_by<K, F>(trace: &CausalTrace, skip: usize, mut key: F) -> BTreeMap<K, StateStat>
where
    K: Ord,
    F: FnMut(usize) -> K,
{
    let mut acc: BTreeMap<K, (usize, f64, Option<f64>)> = BTreeMap::new();
    let mut total = 0usize;
    for (idx, row) in trace.rows.iter().enumerate().skip(skip) {
        let e = acc.entry(key(idx)).or_insert((0, 0.0, Some(0.0)));
        e.0 += 1;
        e.1 += row.estimate_bits;
        e.2 = match (e.2, row.truth_bits) {
            (Some(s), Some(t)) => Some(s + t),
            _ => None,
        };
        total += 1;
    }
    acc.into_iter()
        .map(|(k, (count, est, truth))| {
            let c = count as f64;
            (
                k,
                StateStat {
                    count,
                    percent: 100.0 * c / total as f64,
                    mean_estimate: est / c,
                    mean_truth: truth.map(|t| t / c),
                },
            )
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Delimited export with columns `i,estimate_bits,truth_bits,c_i,cum_abs_err,cum_bound`;
/// absent values are empty fields.
pub fn write_trace_csv<W: Write>(trace: &CausalTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "estimate_bits", "truth_bits", "c_i", "cum_abs_err", "cum_bound"])?;
    for r in &trace.rows {
        w.write_record([
            r.i.to_string(),
            r.estimate_bits.to_string(),
            opt(r.truth_bits),
            r.c_i.to_string(),
            opt(r.cum_abs_err),
            opt(r.cum_bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Record {
    i: usize,
    estimate_bits: f64,
    truth_bits: Option<f64>,
    c_i: f64,
    cum_abs_err: Option<f64>,
    cum_bound: Option<f64>,
}

/// Structured export: one JSON object per line with the same fields as the CSV.
pub fn write_trace_records<W: Write>(trace: &CausalTrace, mut out: W) -> Result<()> {
    for r in &trace.rows {
        let rec = Record {
            i: r.i,
            estimate_bits: r.estimate_bits,
            truth_bits: r.truth_bits,
            c_i: r.c_i,
            cum_abs_err: r.cum_abs_err,
            cum_bound: r.cum_bound,
        };
        serde_json::to_writer(&mut out, &rec).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
