//! Subcommand implementations. Each writes its outputs plus a
//! `<subcommand>.meta.json` record into the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pathcausal::graphs::{build_unrolled_network, classify_markovicity};
use pathcausal::ingest::{
    load_price_csv, market_state_summary, market_symbols, read_symbol_csv, write_state_summary_csv,
    write_symbol_column, write_symbol_csv, QuantizerSpec,
};
use pathcausal::markov::{true_partial_causal_trace, ModelFile};
use pathcausal::measure::{
    causality_regret_bound, estimate_causal_trace_with, estimate_partial_trace_with, write_trace_csv,
    write_trace_records,
};
use pathcausal::{
    attach_truth, estimate_causal_trace, estimate_partial_trace, scenarios, true_causal_trace, Alphabet, Direction,
    EstimatorConfig, JointMarkovModel, RegretBudget, SymbolSeq,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Cli, Command, DirectionArg, Format, ModelArgs};

/// Failure classes, mapped to distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, files or parameters.
    Input(String),
    /// The model or data violate a numerical assumption.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<pathcausal::Error> for CliError {
    fn from(e: pathcausal::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Output directory plus the list of files written so far.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn metadata(mut self, cli: &Cli, details: Value) -> Result<()> {
        let name = format!("{}.meta.json", cli.command.name());
        let outputs = self.written.clone();
        let record = json!({
            "tool": "pathcausal",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": cli.command.name(),
            "config": cli,
            "outputs": outputs,
            "details": details,
        });
        let mut w = self.create(&name)?;
        serde_json::to_writer_pretty(&mut w, &record).map_err(|e| CliError::Input(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

struct LoadedModel {
    model: JointMarkovModel,
    source: Value,
}

fn load_model(args: &ModelArgs) -> Result<Option<LoadedModel>> {
    let model = match (&args.model, args.scenario) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let file: ModelFile =
                toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            file.to_model()?
        }
        (None, Some(s)) => scenarios::by_name(s.name(), args.eps)?,
        (None, None) => return Ok(None),
    };
    // The full kernel is recorded so a run can be repeated from metadata alone.
    let source = to_json(&ModelFile::from_model(&model));
    Ok(Some(LoadedModel { model, source }))
}

fn require_model(args: &ModelArgs) -> Result<LoadedModel> {
    load_model(args)?.ok_or_else(|| CliError::Input("a model is required: pass --model or --scenario".into()))
}

fn read_symbols(path: &Path) -> Result<Vec<usize>> {
    let f = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    read_symbol_csv(f).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn alphabet(flag: Option<usize>, model: Option<Alphabet>, data: &[usize]) -> Result<Alphabet> {
    let size = flag
        .or(model.map(Alphabet::size))
        .unwrap_or_else(|| data.iter().max().map_or(2, |&m| (m + 1).max(2)));
    Ok(Alphabet::new(size)?)
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut out = Outputs::new(&cli.out)?;
    let details = match &cli.command {
        Command::Simulate { model, n, seed } => simulate(cli, &mut out, model, *n, *seed)?,
        Command::Estimate { .. } => estimate(cli, &mut out)?,
        Command::Bounds { .. } => bounds(cli, &mut out)?,
        Command::Dsep { model, horizon } => dsep(&mut out, model, *horizon)?,
        Command::Stocks { .. } => stocks(cli, &mut out)?,
    };
    out.metadata(cli, details)
}

fn simulate(cli: &Cli, out: &mut Outputs, args: &ModelArgs, n: usize, seed: u64) -> Result<Value> {
    let loaded = require_model(args)?;
    let traj = loaded.model.simulate(n, seed)?;
    match cli.format {
        Format::Csv => {
            let mut series = vec![("x.csv", &traj.x), ("y.csv", &traj.y)];
            if let Some(z) = &traj.z {
                series.push(("z.csv", z));
            }
            for (name, s) in series {
                let mut w = out.create(name)?;
                write_symbol_column(s.as_slice(), &mut w)?;
                w.flush()?;
            }
        }
        Format::Records => {
            let mut w = out.create("trajectory.jsonl")?;
            for i in 0..n {
                let mut rec = json!({ "i": i + 1, "x": traj.x.as_slice()[i], "y": traj.y.as_slice()[i] });
                if let Some(z) = &traj.z {
                    rec["z"] = json!(z.as_slice()[i]);
                }
                writeln!(w, "{rec}")?;
            }
            w.flush()?;
        }
    }
    println!("simulated {n} steps (seed {seed}) into {}", cli.out.display());
    Ok(json!({ "seed": seed, "n": n, "model": loaded.source }))
}

fn estimate(cli: &Cli, out: &mut Outputs) -> Result<Value> {
    let Command::Estimate { x, y, z, d, k, direction, x_alphabet, y_alphabet, z_alphabet, model } = &cli.command else {
        unreachable!("dispatched on variant");
    };
    let loaded = load_model(model)?;
    let m = loaded.as_ref().map(|l| &l.model);
    let (xs, ys) = (read_symbols(x)?, read_symbols(y)?);
    let zs = z.as_deref().map(read_symbols).transpose()?;
    let xa = alphabet(*x_alphabet, m.map(|m| m.x_alphabet()), &xs)?;
    let ya = alphabet(*y_alphabet, m.map(|m| m.y_alphabet()), &ys)?;
    let za = zs
        .as_ref()
        .map(|zs| alphabet(*z_alphabet, m.and_then(|m| m.z_alphabet()), zs))
        .transpose()?;
    let xs = SymbolSeq::new(xa, xs)?;
    let ys = SymbolSeq::new(ya, ys)?;
    let zs = match (zs, za) {
        (Some(v), Some(a)) => Some(SymbolSeq::new(a, v)?),
        _ => None,
    };

    let directions: &[Direction] = match direction {
        DirectionArg::Yx => &[Direction::YToX],
        DirectionArg::Xy => &[Direction::XToY],
        DirectionArg::Both => &[Direction::YToX, Direction::XToY],
    };
    let mut traces = Vec::new();
    for &dir in directions {
        let (target, side) = match dir {
            Direction::YToX => (&xs, &ys),
            Direction::XToY => (&ys, &xs),
        };
        let mut config = EstimatorConfig::new(*d, target.alphabet(), side.alphabet()).with_direction(dir);
        if let Some(z) = &zs {
            config = config.with_conditioning(z.alphabet());
        }
        if let Some(k) = k {
            config = config.with_staleness(*k);
        }
        let mut trace = match (k, &zs) {
            (None, None) => estimate_causal_trace(target, side, &config)?,
            (None, Some(z)) => estimate_causal_trace_with(target, side, z, &config)?,
            (Some(_), None) => estimate_partial_trace(target, side, &config)?,
            (Some(_), Some(z)) => estimate_partial_trace_with(target, side, z, &config)?,
        };
        if let Some(model) = m {
            let swapped;
            let oriented = match dir {
                Direction::YToX => model,
                Direction::XToY => {
                    swapped = model.swap_xy()?;
                    &swapped
                }
            };
            let zslice = zs.as_ref().map(|z| z.as_slice());
            let truth = match k {
                None => true_causal_trace(oriented, target.as_slice(), side.as_slice(), zslice)?,
                Some(k) => true_partial_causal_trace(oriented, target.as_slice(), side.as_slice(), zslice, *k)?,
            };
            attach_truth(&mut trace, &truth)?;
        }
        let name = match cli.format {
            Format::Csv => format!("trace_{dir}.csv"),
            Format::Records => format!("trace_{dir}.jsonl"),
        };
        let mut w = out.create(&name)?;
        match cli.format {
            Format::Csv => write_trace_csv(&trace, &mut w)?,
            Format::Records => write_trace_records(&trace, &mut w)?,
        }
        w.flush()?;
        let avg = pathcausal::plug_in_di_rate(&trace);
        println!(
            "{dir}: n = {}, mean estimate {avg:.6} bits, complete L={} S={}, reference L={} S={}",
            trace.len(),
            trace.meta.complete_leaves,
            trace.meta.complete_nodes,
            trace.meta.reference_leaves,
            trace.meta.reference_nodes
        );
        traces.push(json!({ "direction": dir, "file": name, "mean_estimate_bits": avg, "meta": trace.meta }));
    }
    Ok(json!({ "traces": traces, "model": loaded.map(|l| l.source) }))
}

#[derive(Debug, Serialize)]
struct BoundRow {
    i: u64,
    mc_bits: f64,
    mr_bits: f64,
    bound_bits: f64,
}

fn bounds(cli: &Cli, out: &mut Outputs) -> Result<Value> {
    let Command::Bounds { m, n, restricted_leaves, complete_leaves, complete_nodes, d, side_alphabet, k, trace } =
        &cli.command
    else {
        unreachable!("dispatched on variant");
    };
    let (restricted, complete) = match d {
        Some(d) => {
            let target = Alphabet::new(*m)?;
            let side = Alphabet::new(side_alphabet.unwrap_or(*m))?;
            let config = EstimatorConfig::new(*d, target, side).with_staleness(k.unwrap_or(0));
            let reference = match k {
                Some(_) => config.stale_schema(usize::try_from(*n).unwrap_or(usize::MAX)),
                None => config.restricted_schema(),
            };
            (
                Some(RegretBudget::for_schema(&reference, *n)?),
                Some(RegretBudget::for_schema(&config.complete_schema(), *n)?),
            )
        }
        None => {
            let r = restricted_leaves.map(|l| RegretBudget::plain(*m, l, *n)).transpose()?;
            let c = match (complete_leaves, complete_nodes) {
                (Some(l), Some(s)) => Some(RegretBudget::side_info(*m, *l, *s, *n)?),
                (Some(l), None) => Some(RegretBudget::plain(*m, *l, *n)?),
                (None, Some(_)) => return Err(CliError::Input("--complete-nodes needs --complete-leaves".into())),
                (None, None) => None,
            };
            (r, c)
        }
    };
    if restricted.is_none() && complete.is_none() {
        return Err(CliError::Input("give --d or at least one of --restricted-leaves / --complete-leaves".into()));
    }
    for (label, b) in [("M_r", &restricted), ("M_c", &complete)] {
        if let Some(b) = b {
            let s = b.nodes.map_or(String::new(), |s| format!(", S={s}"));
            println!("{label}({n}) = {:.2} bits (m={}, L={}{s})", b.bound_bits, b.alphabet_size, b.leaves);
        }
    }
    let mut curve_file = None;
    if let Some(path) = trace {
        let (Some(r), Some(c)) = (&restricted, &complete) else {
            return Err(CliError::Input("a bound curve needs both predictor budgets".into()));
        };
        let rows = bound_curve(path, r, c)?;
        let name = match cli.format {
            Format::Csv => "bound_curve.csv",
            Format::Records => "bound_curve.jsonl",
        };
        let mut w = out.create(name)?;
        match cli.format {
            Format::Csv => {
                let mut cw = csv::Writer::from_writer(&mut w);
                for r in &rows {
                    cw.serialize(r).map_err(|e| CliError::Input(e.to_string()))?;
                }
                cw.flush()?;
            }
            Format::Records => {
                for r in &rows {
                    writeln!(w, "{}", to_json(r))?;
                }
            }
        }
        w.flush()?;
        println!("bound curve: {} rows in {name}", rows.len());
        curve_file = Some(name);
    }
    let report = json!({ "n": n, "restricted": restricted, "complete": complete, "curve": curve_file });
    let mut w = out.create("bounds.json")?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(report)
}

/// Bound at every step `i >= L` of a trace, from its `c_i` column.
fn bound_curve(path: &Path, r: &RegretBudget, c: &RegretBudget) -> Result<Vec<BoundRow>> {
    let bad = |e: String| CliError::Input(format!("{}: {e}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name:?}")));
    let (ci, cc) = (col("i")?, col("c_i")?);
    let mut c_sq = 0.0;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let i: u64 = rec[ci].parse().map_err(|e| bad(format!("i: {e}")))?;
        let cv: f64 = rec[cc].parse().map_err(|e| bad(format!("c_i: {e}")))?;
        c_sq += cv * cv;
        if i < r.leaves.max(c.leaves) {
            continue;
        }
        let (mr, mc) = (r.at(i)?.bound_bits, c.at(i)?.bound_bits);
        let b = causality_regret_bound(mc.max(0.0), mr.max(0.0), c_sq.sqrt())?;
        rows.push(BoundRow { i, mc_bits: mc, mr_bits: mr, bound_bits: b.bits });
    }
    Ok(rows)
}

fn dsep(out: &mut Outputs, args: &ModelArgs, horizon: usize) -> Result<Value> {
    let loaded = require_model(args)?;
    let report = classify_markovicity(&loaded.model)?;
    let dag = build_unrolled_network(&loaded.model, horizon)?;
    let mut w = out.create("edges.txt")?;
    dag.write_edge_list(&mut w)?;
    w.flush()?;
    println!("class: {}", report.class);
    println!(
        "Y->X edges: {}; separating lag: {}; faithfulness caveat: {}",
        report.y_to_x_edges.len(),
        report.separating_lag.map_or("none".into(), |l| l.to_string()),
        report.faithfulness_caveat
    );
    println!("{} edges over {horizon} steps in edges.txt", dag.edge_count());
    let value = json!({ "report": report, "horizon": horizon, "edges": dag.edge_count(), "model": loaded.source });
    let mut w = out.create("dsep.json")?;
    serde_json::to_writer_pretty(&mut w, &value["report"]).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(value)
}

fn stocks(cli: &Cli, out: &mut Outputs) -> Result<Value> {
    let Command::Stocks { early, late, early_name, late_name, threshold, skip } = &cli.command else {
        unreachable!("dispatched on variant");
    };
    let e = load_price_csv(early)?;
    let l = load_price_csv(late)?;
    let data = market_symbols(&e, &l, QuantizerSpec::new(*threshold)?)?;
    for (name, symbols) in [(early_name, &data.early), (late_name, &data.late)] {
        let mut w = out.create(&format!("{}_symbols.csv", name.to_lowercase()))?;
        write_symbol_csv(&data.dates, symbols, &mut w)?;
        w.flush()?;
    }
    let rows = market_state_summary(&data, early_name, late_name, *skip)?;
    match cli.format {
        Format::Csv => {
            let mut w = out.create("summary.csv")?;
            write_state_summary_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Format::Records => {
            let mut w = out.create("summary.jsonl")?;
            for r in &rows {
                writeln!(w, "{}", to_json(r))?;
            }
            w.flush()?;
        }
    }
    println!("{:<10} {:>6} {:>6} {:>6} {:>8} {:>10} {:>10}", "direction", "x_prev", "y_prev", "count", "percent", "mean_bits", "di_bits");
    for r in &rows {
        println!(
            "{:<10} {:>6} {:>6} {:>6} {:>7.2}% {:>10.4} {:>10.4}",
            r.direction, r.x_prev, r.y_prev, r.count, r.percent, r.mean_estimate_bits, r.plug_in_di_bits
        );
    }
    Ok(json!({
        "days": data.dates.len(),
        "first": data.dates.first().map(|d| d.to_string()),
        "last": data.dates.last().map(|d| d.to_string()),
        "alignment": data.alignment,
        "quantizer": data.quantizer,
    }))
}
