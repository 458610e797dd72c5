//! Daily price data to ternary symbol pairs: CSV loading, calendar
//! alignment with interpolation, percent-change quantization, and the
//! one-day shift between markets in different time zones.
//!
//! Input CSVs have a header with `date` (ISO-8601) and `adj_close`
//! columns; header matching ignores case and treats spaces as underscores,
//! so Yahoo-style `Date,...,Adj Close` files load unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{Alphabet, Symbol, SymbolSeq};
use crate::measure::{estimate_causal_trace, plug_in_di_rate, summarize_by, EstimatorConfig};

/// Relative slack below which a return counts as exactly on the threshold,
/// absorbing the rounding in `(p1 - p0) / p0`.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Identifies the interpolation rule in output metadata.
pub const INTERPOLATION_RULE: &str = "linear-in-price-over-union-trading-days";

/// Strictly increasing dates with positive prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Sorts by date; rejects duplicates and non-positive or non-finite prices.
    pub fn new(mut records: Vec<(NaiveDate, f64)>) -> Result<Self> {
        records.sort_by_key(|r| r.0);
        for w in records.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidSeries(format!("duplicate date {}", w[0].0)));
            }
        }
        if let Some((d, p)) = records.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidSeries(format!("price {p} on {d} is not positive")));
        }
        let (dates, prices) = records.into_iter().unzip();
        Ok(PriceSeries { dates, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Same dates, every price multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        PriceSeries::new(self.dates.iter().zip(&self.prices).map(|(&d, &p)| (d, p * factor)).collect())
    }
}

fn normalize_header(h: &str) -> String {
    h.trim().to_ascii_lowercase().replace(' ', "_")
}

/// Parses a price CSV from any reader.
pub fn read_price_csv<R: Read>(reader: R) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(normalize_header).collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name:?}")))
    };
    let (date_col, price_col) = (col("date")?, col("adj_close")?);
    let mut records = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let row = line + 2;
        let date = NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d")
            .map_err(|e| Error::Parse(format!("row {row}: date {:?}: {e}", field(date_col))))?;
        let price: f64 = field(price_col)
            .parse()
            .map_err(|e| Error::Parse(format!("row {row}: price {:?}: {e}", field(price_col))))?;
        records.push((date, price));
    }
    PriceSeries::new(records)
}

pub fn load_price_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_price_csv(file)
}

/// What [`align_calendars`] filled in or dropped.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AlignmentMeta {
    pub rule: String,
    pub interpolated_a: Vec<String>,
    pub interpolated_b: Vec<String>,
    /// Union dates outside one series' range (no neighbor on one side).
    pub trimmed: Vec<String>,
}

/// Two price series on a common calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPrices {
    pub dates: Vec<NaiveDate>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub meta: AlignmentMeta,
}

impl AlignedPrices {
    pub fn into_series(self) -> Result<(PriceSeries, PriceSeries)> {
        let a = PriceSeries::new(self.dates.iter().copied().zip(self.a).collect())?;
        let b = PriceSeries::new(self.dates.iter().copied().zip(self.b).collect())?;
        Ok((a, b))
    }
}

/// Aligns two series on the union of their trading dates. A date missing
/// from one series is filled by linear interpolation between that series'
/// neighboring prices, weighted by position in the union calendar. Dates
/// absent from both never appear; union dates before the later start or
/// after the earlier end are trimmed.
pub fn align_calendars(a: &PriceSeries, b: &PriceSeries) -> Result<AlignedPrices> {
    let (Some(&a0), Some(&b0)) = (a.dates.first(), b.dates.first()) else {
        return Err(Error::InvalidSeries("empty price series".into()));
    };
    let start = a0.max(b0);
    let end = (*a.dates.last().expect("non-empty")).min(*b.dates.last().expect("non-empty"));
    if start > end {
        return Err(Error::InvalidSeries("date ranges do not overlap".into()));
    }
    let union: BTreeSet<NaiveDate> = a.dates.iter().chain(&b.dates).copied().collect();
    let mut meta = AlignmentMeta { rule: INTERPOLATION_RULE.into(), ..Default::default() };
    let mut dates = Vec::new();
    for &d in &union {
        if d < start || d > end {
            meta.trimmed.push(d.to_string());
        } else {
            dates.push(d);
        }
    }
    let fill = |s: &PriceSeries, log: &mut Vec<String>| -> Vec<f64> {
        let known: BTreeMap<NaiveDate, f64> = s.dates.iter().copied().zip(s.prices.iter().copied()).collect();
        let mut out: Vec<Option<f64>> = dates.iter().map(|d| known.get(d).copied()).collect();
        // Both ends are known because the range was clipped to each series.
        let mut last = 0usize;
        for i in 1..out.len() {
            if out[i].is_some() {
                let (p0, p1) = (out[last].expect("known"), out[i].expect("known"));
                for (j, slot) in out.iter_mut().enumerate().take(i).skip(last + 1) {
                    let w = (j - last) as f64 / (i - last) as f64;
                    *slot = Some(p0 + (p1 - p0) * w);
                    log.push(dates[j].to_string());
                }
                last = i;
            }
        }
        out.into_iter().map(|p| p.expect("filled")).collect()
    };
    let av = fill(a, &mut meta.interpolated_a);
    let bv = fill(b, &mut meta.interpolated_b);
    Ok(AlignedPrices { dates, a: av, b: bv, meta })
}

/// Ternary quantization of daily percent changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizerSpec {
    threshold: f64,
}

impl QuantizerSpec {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::InvalidParameter(format!("threshold must be positive, got {threshold}")));
        }
        Ok(QuantizerSpec { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// 0 for a drop of more than the threshold, 2 for a rise of more than
    /// the threshold, 1 otherwise (ties included).
    pub fn symbol(&self, r: f64) -> Symbol {
        if r < -self.threshold - TIE_TOLERANCE {
            0
        } else if r > self.threshold + TIE_TOLERANCE {
            2
        } else {
            1
        }
    }
}

impl Default for QuantizerSpec {
    fn default() -> Self {
        QuantizerSpec { threshold: 0.008 }
    }
}

/// `r_i = (p_i - p_{i-1}) / p_{i-1}` quantized; output has one fewer element.
pub fn pct_change_quantize(prices: &[f64], spec: QuantizerSpec) -> Result<SymbolSeq> {
    if prices.len() < 2 {
        return Err(Error::InvalidSeries(format!("need at least 2 prices, got {}", prices.len())));
    }
    let symbols = prices.windows(2).map(|w| spec.symbol((w[1] - w[0]) / w[0])).collect();
    SymbolSeq::new(Alphabet::new(3)?, symbols)
}

/// Target/side pair with the side advanced by `lag` steps:
/// `side[i]` is the original `side[i + lag]`, paired with `target[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftedPair {
    pub target: Vec<Symbol>,
    pub side: Vec<Symbol>,
    pub lag: usize,
}

/// Advances `side` by one step relative to `target`, so an estimator that
/// conditions on `side_{i-1}` when predicting `target_i` sees the
/// original same-index side symbol. An `n`-length pair yields `n - 1` steps.
pub fn shift_for_market_order(target: &[Symbol], side: &[Symbol]) -> Result<ShiftedPair> {
    if target.len() != side.len() {
        return Err(Error::LengthMismatch { left: target.len(), right: side.len() });
    }
    ShiftedPair { target: target.to_vec(), side: side.to_vec(), lag: 0 }.shifted()
}

impl ShiftedPair {
    /// Shifts once more (lag + 1).
    pub fn shifted(&self) -> Result<ShiftedPair> {
        let n = self.target.len();
        if n < 2 {
            return Err(Error::InvalidSeries("cannot shift a sequence shorter than 2".into()));
        }
        Ok(ShiftedPair {
            target: self.target[..n - 1].to_vec(),
            side: self.side[1..].to_vec(),
            lag: self.lag + 1,
        })
    }

    /// The original sequences covered by this pair, each on its own
    /// index: `target[..n - lag]` and `side[lag..]` of the unshifted input.
    pub fn unshift(&self) -> (Vec<Symbol>, Vec<Symbol>) {
        (self.target.clone(), self.side.clone())
    }
}

/// Symbols for two markets on their aligned calendar. `dates[i]` is the
/// day whose close ends the change `symbols[i]`. `early` is the market
/// whose session on each calendar date closes first (the eastern time zone).
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSymbols {
    pub dates: Vec<NaiveDate>,
    pub early: SymbolSeq,
    pub late: SymbolSeq,
    pub alignment: AlignmentMeta,
    pub quantizer: QuantizerSpec,
}

/// Align, then quantize both markets.
pub fn market_symbols(early: &PriceSeries, late: &PriceSeries, spec: QuantizerSpec) -> Result<MarketSymbols> {
    let aligned = align_calendars(early, late)?;
    Ok(MarketSymbols {
        dates: aligned.dates[1..].to_vec(),
        early: pct_change_quantize(&aligned.a, spec)?,
        late: pct_change_quantize(&aligned.b, spec)?,
        alignment: aligned.meta,
        quantizer: spec,
    })
}

/// Writes `date,symbol` rows.
pub fn write_symbol_csv<W: Write>(dates: &[NaiveDate], symbols: &SymbolSeq, out: W) -> Result<()> {
    if dates.len() != symbols.len() {
        return Err(Error::LengthMismatch { left: dates.len(), right: symbols.len() });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "symbol"])?;
    for (d, s) in dates.iter().zip(symbols.as_slice()) {
        w.write_record([d.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `symbol` column of a CSV with a header; other columns are ignored.
pub fn read_symbol_csv<R: Read>(reader: R) -> Result<Vec<Symbol>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let col = rdr
        .headers()?
        .iter()
        .position(|h| normalize_header(h) == "symbol")
        .ok_or_else(|| Error::Parse("missing column \"symbol\"".into()))?;
    rdr.records()
        .enumerate()
        .map(|(line, rec)| {
            let rec = rec?;
            let field = rec.get(col).unwrap_or("");
            field
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: symbol {field:?}: {e}", line + 2)))
        })
        .collect()
}

/// Writes a single `symbol` column.
pub fn write_symbol_column<W: Write>(symbols: &[Symbol], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["symbol"])?;
    for s in symbols {
        w.write_record([s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean causal-measure estimate for one previous-step state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummaryRow {
    pub direction: String,
    pub x_prev: Symbol,
    pub y_prev: Symbol,
    pub count: usize,
    pub percent: f64,
    pub mean_estimate_bits: f64,
    pub plug_in_di_bits: f64,
}

/// Depth-1 estimates in both directions between two markets, grouped by
/// the previous-step state `(x_{i-1}, y_{i-1})` of each direction's pair,
/// over steps after `skip`.
///
/// `late -> early`: the early market's change on a date is predicted from
/// the late market's change on the previous date (same-index pairing).
/// `early -> late`: the early series is advanced one step, so the late
/// market's change on a date is predicted from the early market's change
/// on that same date, which closed before.
pub fn market_state_summary(
    data: &MarketSymbols,
    early_name: &str,
    late_name: &str,
    skip: usize,
) -> Result<Vec<StateSummaryRow>> {
    let three = Alphabet::new(3)?;
    let late_to_early = (data.early.as_slice().to_vec(), data.late.as_slice().to_vec());
    let shifted = shift_for_market_order(data.late.as_slice(), data.early.as_slice())?;
    let early_to_late = (shifted.target, shifted.side);
    let mut out = Vec::new();
    for (label, (x, y)) in [
        (format!("{late_name}->{early_name}"), late_to_early),
        (format!("{early_name}->{late_name}"), early_to_late),
    ] {
        let xs = SymbolSeq::new(three, x)?;
        let ys = SymbolSeq::new(three, y)?;
        let trace = estimate_causal_trace(&xs, &ys, &EstimatorConfig::new(1, three, three))?;
        let di = plug_in_di_rate(&trace);
        let (xv, yv) = (xs.as_slice(), ys.as_slice());
        let stats = summarize_by(&trace, skip.max(1), |i| (xv[i - 1], yv[i - 1]));
        for ((x_prev, y_prev), s) in stats {
            out.push(StateSummaryRow {
                direction: label.clone(),
                x_prev,
                y_prev,
                count: s.count,
                percent: s.percent,
                mean_estimate_bits: s.mean_estimate,
                plug_in_di_bits: di,
            });
        }
    }
    Ok(out)
}

/// Fixed six-decimal CSV rendering, stable across platforms.
pub fn write_state_summary_csv<W: Write>(rows: &[StateSummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["direction", "x_prev", "y_prev", "count", "percent", "mean_estimate_bits", "plug_in_di_bits"])?;
    for r in rows {
        w.write_record([
            r.direction.clone(),
            r.x_prev.to_string(),
            r.y_prev.to_string(),
            r.count.to_string(),
            format!("{:.6}", r.percent),
            format!("{:.6}", r.mean_estimate_bits),
            format!("{:.6}", r.plug_in_di_bits),
        ])?;
    }
    w.flush()?;
    Ok(())
}
