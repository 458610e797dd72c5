//! Acceptance criteria AC1–AC8. Runs as a plain binary so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fail.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use pathcausal::graphs::{
    build_unrolled_network, classify_markovicity, d_separated, node_set_cmi, Markovicity, Node, NodeSet, PathLaw,
    Process, UnrolledDag, EDGE_THRESHOLD,
};
use pathcausal::ingest::{
    load_price_csv, market_state_summary, market_symbols, pct_change_quantize, write_state_summary_csv,
    write_symbol_csv, QuantizerSpec,
};
use pathcausal::markov::{path_distribution, RestrictedFilter};
use pathcausal::measure::summarize_by;
use pathcausal::{
    attach_truth, estimate_causal_trace, estimate_partial_trace, exact_pdi_rate, exact_tdi_rate,
    kl_divergence, mc_di_rate, plug_in_di_rate, scenarios, true_causal_trace, true_restricted_brute, Alphabet,
    ContextSchema, ContextTree, EstimatorConfig, JointMarkovModel, ProbDist, RegretBudget, SymbolSeq,
};

type Outcome = std::result::Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn two() -> Alphabet {
    Alphabet::new(2).unwrap()
}

fn three() -> Alphabet {
    Alphabet::new(3).unwrap()
}

fn bern(p: f64) -> ProbDist {
    ProbDist::new(vec![1.0 - p, p]).unwrap()
}

fn max_diff(p: &ProbDist, q: &ProbDist) -> f64 {
    p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// AC1: recursive restricted filter vs brute-force marginalization.
fn ac1() -> Outcome {
    const TOL: f64 = 1e-10;
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for seed in 0..50u64 {
        let m = scenarios::random(1, two(), two(), None, 0.05, 1000 + seed).map_err(|e| e.to_string())?;
        // Every binary history up to length 6.
        let mut stack = vec![(Vec::new(), RestrictedFilter::new(&m).map_err(|e| e.to_string())?)];
        while let Some((hist, filter)) = stack.pop() {
            let rec = filter.dist().map_err(|e| e.to_string())?;
            let brute = true_restricted_brute(&m, &hist, None).map_err(|e| e.to_string())?;
            worst = worst.max(max_diff(&rec, &brute));
            compared += 1;
            if hist.len() < 6 {
                for s in 0..2 {
                    let mut f = filter.clone();
                    f.observe(s, None).map_err(|e| e.to_string())?;
                    let mut h = hist.clone();
                    h.push(s);
                    stack.push((h, f));
                }
            }
        }
        // Every prefix of a simulated history of length 12.
        let x = m.simulate(12, seed).map_err(|e| e.to_string())?.x.into_vec();
        let mut f = RestrictedFilter::new(&m).map_err(|e| e.to_string())?;
        for i in 0..=x.len() {
            let brute = true_restricted_brute(&m, &x[..i], None).map_err(|e| e.to_string())?;
            worst = worst.max(max_diff(&f.dist().map_err(|e| e.to_string())?, &brute));
            compared += 1;
            if i < x.len() {
                f.observe(x[i], None).map_err(|e| e.to_string())?;
            }
        }
    }
    check(worst <= TOL, format!("max |filter - brute| = {worst:.3e} > {TOL:e}"))?;
    Ok(format!("{compared} histories on 50 models, max diff {worst:.2e}"))
}

/// Entropy in bits of a distribution given as unnormalized-key weights.
fn entropy_of(weights: &HashMap<u64, f64>) -> f64 {
    let mut keys: Vec<_> = weights.keys().copied().collect();
    keys.sort_unstable();
    keys.iter()
        .map(|k| weights[k])
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// AC2: sum of expected causal measures equals the entropy-difference DI.
fn ac2() -> Outcome {
    const TOL: f64 = 1e-9;
    const N: usize = 8;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let m = scenarios::random(1, two(), two(), None, 0.05, 2000 + seed).map_err(|e| e.to_string())?;
        let paths = path_distribution(&m, N).map_err(|e| e.to_string())?;
        let j = m.joint_size();
        let decode = |u: usize| {
            let mut rest = u;
            let mut xs = vec![0; N];
            let mut ys = vec![0; N];
            for t in (0..N).rev() {
                let s = m.joint_symbol(rest % j);
                xs[t] = s.x;
                ys[t] = s.y;
                rest /= j;
            }
            (xs, ys)
        };
        // Expected C(i) by enumeration of every joint path.
        let mut expected_c = [0.0; N];
        // Marginals for the entropy side: H(X^i) and H(X^i, Y^{i-1}).
        let mut hx: Vec<HashMap<u64, f64>> = vec![HashMap::new(); N + 1];
        let mut hxy: Vec<HashMap<u64, f64>> = vec![HashMap::new(); N + 1];
        for (u, &p) in paths.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let (xs, ys) = decode(u);
            let c = true_causal_trace(&m, &xs, &ys, None).map_err(|e| e.to_string())?;
            for i in 0..N {
                expected_c[i] += p * c[i];
            }
            for i in 1..=N {
                let kx = xs[..i].iter().fold(0u64, |a, &v| a * 2 + v as u64);
                let ky = ys[..i - 1].iter().fold(0u64, |a, &v| a * 2 + v as u64);
                *hx[i].entry(kx).or_default() += p;
                *hxy[i].entry((kx << 32) | ky).or_default() += p;
            }
        }
        // H(X^n || Y^{n-1}) = sum_i H(X^i, Y^{i-1}) - H(X^{i-1}, Y^{i-1}).
        let mut cum_c = 0.0;
        let mut causal_cond = 0.0;
        for n in 1..=N {
            cum_c += expected_c[n - 1];
            let prev_xy: HashMap<u64, f64> = hxy[n].iter().fold(HashMap::new(), |mut acc, (&k, &p)| {
                // Drop X_n (bit 32 of the x key) keeping Y^{n-1}.
                let kx = k >> 32;
                *acc.entry(((kx >> 1) << 32) | (k & 0xffff_ffff)).or_default() += p;
                acc
            });
            causal_cond += entropy_of(&hxy[n]) - entropy_of(&prev_xy);
            let di = entropy_of(&hx[n]) - causal_cond;
            worst = worst.max((cum_c - di).abs());
        }
    }
    check(worst <= TOL, format!("max |sum E[C] - DI| = {worst:.3e} > {TOL:e}"))?;
    Ok(format!("20 models, n = 1..{N}, max diff {worst:.2e}"))
}

/// AC3: closed forms for the two binary families and the estimator's
/// per-state values.
fn ac3() -> Outcome {
    const EXACT_TOL: f64 = 1e-12;
    const EST_TOL: f64 = 0.02;
    const N: usize = 10_000;
    const SEED: u64 = 1;
    let (p1, p2, eps) = (0.9, 0.1, 0.1);
    let m = scenarios::iid_influence(p1, p2, eps).map_err(|e| e.to_string())?;
    let mix = bern(p1 * eps + p2 * (1.0 - eps));
    let c_y1 = kl_divergence(&bern(p1), &mix).unwrap();
    let c_y0 = kl_divergence(&bern(p2), &mix).unwrap();
    let t = m.simulate(N, SEED).map_err(|e| e.to_string())?;
    let (x, y) = (t.x.as_slice(), t.y.as_slice());
    let truth = true_causal_trace(&m, x, y, None).map_err(|e| e.to_string())?;
    let mut worst_exact = 0.0f64;
    for i in 1..N {
        let want = if y[i - 1] == 1 { c_y1 } else { c_y0 };
        worst_exact = worst_exact.max((truth[i] - want).abs());
    }
    // Cross copying: C(i) depends on whether x_{i-2} equals y_{i-1}.
    let ce = scenarios::CROSS_COPY_EPS;
    let cc = scenarios::cross_copy(ce).map_err(|e| e.to_string())?;
    let same = kl_divergence(&bern(ce), &bern(2.0 * ce * (1.0 - ce))).unwrap();
    let diff = kl_divergence(&bern(ce), &bern(ce * ce + (1.0 - ce) * (1.0 - ce))).unwrap();
    let tc = cc.simulate(2000, SEED).map_err(|e| e.to_string())?;
    let (cx, cy) = (tc.x.as_slice(), tc.y.as_slice());
    let ctruth = true_causal_trace(&cc, cx, cy, None).map_err(|e| e.to_string())?;
    for i in 2..cx.len() {
        let want = if cx[i - 2] == cy[i - 1] { same } else { diff };
        worst_exact = worst_exact.max((ctruth[i] - want).abs());
    }
    check(worst_exact <= EXACT_TOL, format!("closed-form mismatch {worst_exact:.3e}"))?;

    let trace = estimate_causal_trace(&t.x, &t.y, &EstimatorConfig::new(1, two(), two())).map_err(|e| e.to_string())?;
    let stats = summarize_by(&trace, N - 1000, |i| y[i - 1]);
    let e1 = stats.get(&1).map_or(f64::NAN, |s| s.mean_estimate) - c_y1;
    let e0 = stats.get(&0).map_or(f64::NAN, |s| s.mean_estimate) - c_y0;
    let detail = format!(
        "closed forms max err {worst_exact:.1e}; per-state estimate error y=1: {e1:+.4}, y=0: {e0:+.4} (tol {EST_TOL})"
    );
    check(e1.abs() <= EST_TOL && e0.abs() <= EST_TOL, detail.clone())?;
    Ok(detail)
}

/// Realized log-loss regret of a CTW predictor against the best depth-`d`
/// context model in hindsight, checked against its bound at every prefix.
/// Contexts with missing history count as their own comparator leaves.
fn predictor_regret_within_bound(schema: &ContextSchema, x: &[usize], side: Option<&[usize]>) -> Result<f64, String> {
    let m = schema.target().size();
    let mut tree = ContextTree::new(*schema);
    let mut ctw_loss = 0.0;
    // Per-context counts for the maximum-likelihood comparator; its loss is
    // sum_c [n_c log n_c - sum_a n_ca log n_ca].
    let mut counts: HashMap<Vec<Option<usize>>, Vec<u64>> = HashMap::new();
    let mut ml_loss = 0.0;
    let nlogn = |n: u64| if n == 0 { 0.0 } else { n as f64 * (n as f64).log2() };
    let mut min_slack = f64::INFINITY;
    for i in 0..x.len() {
        let ctx = schema.context(i, x, side).map_err(|e| e.to_string())?;
        let p = tree.predict(&ctx).map_err(|e| e.to_string())?;
        ctw_loss -= p.prob(x[i]).log2();
        tree.observe(&ctx, x[i]).map_err(|e| e.to_string())?;
        let c = counts.entry(ctx.levels().to_vec()).or_insert_with(|| vec![0; m]);
        let total: u64 = c.iter().sum();
        ml_loss += nlogn(total + 1) - nlogn(total) - (nlogn(c[x[i]] + 1) - nlogn(c[x[i]]));
        c[x[i]] += 1;
        let n = (i + 1) as u64;
        if n >= schema.leaf_count() {
            let bound = RegretBudget::for_schema(schema, n).map_err(|e| e.to_string())?.bound_bits;
            let regret = ctw_loss - ml_loss;
            min_slack = min_slack.min(bound - regret);
            if regret > bound + 1e-9 {
                return Err(format!("prefix {n}: regret {regret:.3} > bound {bound:.3}"));
            }
        }
    }
    Ok(min_slack)
}

/// AC4: causality regret below its bound at checkpoints; predictor regret
/// below the CTW bounds at every prefix.
fn ac4() -> Outcome {
    const N: usize = 10_000;
    const CHECKPOINTS: [usize; 3] = [100, 1_000, 10_000];
    let mut worst_ratio = 0.0f64;
    let mut min_slack = f64::INFINITY;
    for (name, model) in [("independent", scenarios::independent()), ("unidirectional", scenarios::unidirectional())] {
        for seed in 1..=5u64 {
            let t = model.simulate(N, seed).map_err(|e| e.to_string())?;
            let config = EstimatorConfig::new(1, three(), three());
            let mut trace = estimate_causal_trace(&t.x, &t.y, &config).map_err(|e| e.to_string())?;
            let truth = true_causal_trace(&model, t.x.as_slice(), t.y.as_slice(), None).map_err(|e| e.to_string())?;
            attach_truth(&mut trace, &truth).map_err(|e| e.to_string())?;
            for n in CHECKPOINTS {
                let row = &trace.rows[n - 1];
                let err = row.cum_abs_err.expect("truth attached") / n as f64;
                let bound = row.cum_bound.ok_or(format!("{name} seed {seed}: no bound at n={n}"))? / n as f64;
                worst_ratio = worst_ratio.max(err / bound);
                check(err <= bound, format!("{name} seed {seed} n={n}: CR/n {err:.4} > bound/n {bound:.4}"))?;
            }
            let (x, y) = (t.x.as_slice(), t.y.as_slice());
            for (schema, side) in [(config.complete_schema(), Some(y)), (config.restricted_schema(), None)] {
                let slack = predictor_regret_within_bound(&schema, x, side).map_err(|e| format!("{name} seed {seed}: {e}"))?;
                min_slack = min_slack.min(slack);
            }
        }
    }
    Ok(format!(
        "10 runs; worst CR/bound ratio {worst_ratio:.3} at checkpoints; min predictor bound slack {min_slack:.2} bits"
    ))
}

fn bidirectional_run(seed: u64, n: usize) -> Result<(SymbolSeq, SymbolSeq), String> {
    let t = scenarios::bidirectional().simulate(n, seed).map_err(|e| e.to_string())?;
    Ok((t.x, t.y))
}

/// AC5: partial estimator converges to the exact partial DI rate.
fn ac5() -> Outcome {
    const TOL: f64 = 0.01;
    let m = scenarios::bidirectional();
    let pdi = exact_pdi_rate(&m, 1).map_err(|e| e.to_string())?;
    let (x, y) = bidirectional_run(1, 50_000)?;
    let config = EstimatorConfig::new(1, three(), three()).with_staleness(1);
    let trace = estimate_partial_trace(&x, &y, &config).map_err(|e| e.to_string())?;
    let avg = plug_in_di_rate(&trace);
    let detail = format!(
        "time-averaged partial estimate {avg:.4} vs exact PDI(1) {pdi:.4} (|diff| {:.4}, tol {TOL}); L={} S={}",
        (avg - pdi).abs(),
        trace.meta.reference_leaves,
        trace.meta.reference_nodes
    );
    check((avg - pdi).abs() <= TOL, detail.clone())?;
    Ok(detail)
}

/// AC6: plug-in estimate converges to the truncated rate, and the
/// PDI <= DI <= TDI sandwich holds with a resolvable TDI - DI gap.
fn ac6() -> Outcome {
    const TOL: f64 = 0.01;
    let m = scenarios::bidirectional();
    let d = m.order();
    let pdi = exact_pdi_rate(&m, 1).map_err(|e| e.to_string())?;
    let tdi = exact_tdi_rate(&m, d).map_err(|e| e.to_string())?;
    let (x, y) = bidirectional_run(1, 50_000)?;
    let trace = estimate_causal_trace(&x, &y, &EstimatorConfig::new(d, three(), three())).map_err(|e| e.to_string())?;
    let plug = plug_in_di_rate(&trace);
    let mc = mc_di_rate(&m, 1_000_000, 1).map_err(|e| e.to_string())?;
    let se3 = 3.0 * mc.std_err;
    let detail = format!(
        "plug-in {plug:.4} vs TDI {tdi:.4}; PDI {pdi:.4} <= DI {:.4} ± {:.4} <= TDI {tdi:.4}; TDI - DI = {:.4}",
        mc.mean,
        mc.std_err,
        tdi - mc.mean
    );
    check((plug - tdi).abs() <= TOL, format!("plug-in off by {:.4}: {detail}", (plug - tdi).abs()))?;
    check(pdi <= mc.mean + se3 && mc.mean <= tdi + se3, format!("sandwich violated: {detail}"))?;
    check(tdi - mc.mean > se3, format!("bias not resolved: {detail}"))?;
    Ok(detail)
}

fn x_(t: usize) -> Node {
    Node::new(Process::X, t)
}

fn y_(t: usize) -> Node {
    Node::new(Process::Y, t)
}

fn nodes(v: &[Node]) -> NodeSet {
    v.iter().copied().collect()
}

/// AC7: d-separation cases, scenario classification, soundness sweep.
fn ac7() -> Outcome {
    // Chain X1 -> X2 -> X3; fork X2 <- Y1 -> Y2; collider X1 -> Y2 <- Y1 -> ... -> X3.
    let build = |edges: &[(Node, Node)]| {
        let mut g = UnrolledDag::new(&[Process::X, Process::Y], 3, 2).unwrap();
        for &(a, b) in edges {
            g.add_edge(a, b).unwrap();
        }
        g
    };
    let chain = build(&[(x_(1), x_(2)), (x_(2), x_(3))]);
    let fork = build(&[(y_(1), x_(2)), (y_(1), y_(2))]);
    let collider = build(&[(x_(1), y_(2)), (y_(1), y_(2)), (y_(2), x_(3))]);
    type Case<'a> = (&'a UnrolledDag, &'a [Node], &'a [Node], &'a [Node], bool);
    let cases: [Case; 12] = [
        (&chain, &[x_(1)], &[x_(3)], &[x_(2)], true),
        (&chain, &[x_(1)], &[x_(3)], &[], false),
        (&chain, &[x_(1)], &[x_(2)], &[x_(3)], false),
        (&chain, &[x_(1), x_(2)], &[y_(3)], &[], true),
        (&fork, &[x_(2)], &[y_(2)], &[y_(1)], true),
        (&fork, &[x_(2)], &[y_(2)], &[], false),
        (&fork, &[x_(2)], &[y_(2)], &[x_(1)], false),
        (&fork, &[x_(1)], &[x_(2), y_(2)], &[], true),
        (&collider, &[x_(1)], &[y_(1)], &[], true),
        (&collider, &[x_(1)], &[y_(1)], &[y_(2)], false),
        (&collider, &[x_(1)], &[y_(1)], &[x_(3)], false),
        (&collider, &[x_(1)], &[x_(3)], &[y_(2)], true),
    ];
    for (k, (g, a, b, c, want)) in cases.iter().enumerate() {
        let (a, b, c) = (nodes(a), nodes(b), nodes(c));
        let got = d_separated(g, &a, &b, &c).map_err(|e| e.to_string())?;
        let sym = d_separated(g, &b, &a, &c).map_err(|e| e.to_string())?;
        check(got == *want && sym == *want, format!("d-separation case {} wrong", k + 1))?;
    }

    for (name, model, want) in [
        ("independent", scenarios::independent(), Markovicity::ConditionallyDMarkov),
        ("unidirectional", scenarios::unidirectional(), Markovicity::MarkovOrderAtMost2d),
        ("bidirectional", scenarios::bidirectional(), Markovicity::NoFiniteOrder),
    ] {
        let got = classify_markovicity(&model).map_err(|e| e.to_string())?.class;
        check(got == want, format!("{name}: classified {got}, expected {want}"))?;
    }

    // Soundness: separated => exact conditional MI below threshold.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let horizon = 5;
    let (mut triples, mut separated, mut seed) = (0, 0, 0u64);
    let mut worst = 0.0f64;
    while triples < 200 {
        let model: JointMarkovModel = scenarios::sparse_random(seed)
            .and_then(|m| m.with_uniform_initial())
            .map_err(|e| e.to_string())?;
        seed += 1;
        let g = build_unrolled_network(&model, horizon).map_err(|e| e.to_string())?;
        for _ in 0..4 {
            let mut sets = [NodeSet::new(), NodeSet::new(), NodeSet::new()];
            for n in g.nodes() {
                let k = rng.gen_range(0..6);
                if k < 3 {
                    sets[k].insert(n);
                }
            }
            if sets[0].is_empty() || sets[1].is_empty() {
                continue;
            }
            triples += 1;
            if d_separated(&g, &sets[0], &sets[1], &sets[2]).map_err(|e| e.to_string())? {
                separated += 1;
                let cmi = node_set_cmi(&model, horizon, PathLaw::Initial, &sets[0], &sets[1], &sets[2])
                    .map_err(|e| e.to_string())?;
                worst = worst.max(cmi);
                check(cmi <= EDGE_THRESHOLD, format!("model {}: separated but I = {cmi:.3e}", seed - 1))?;
            }
        }
    }
    check(separated > 0, "soundness sweep produced no separated triples")?;
    Ok(format!(
        "12 d-separation cases, 3 scenario classes, {triples} random triples ({separated} separated, max CMI {worst:.1e})"
    ))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/stocks").join(name)
}

/// AC8: quantizer cases and the byte-identical fixture pipeline.
fn ac8() -> Outcome {
    let q = QuantizerSpec::default();
    let sym = |p1: f64| pct_change_quantize(&[100.0, p1], q).unwrap().as_slice()[0];
    for (p1, want) in [(101.2, 2), (99.1, 0), (100.3, 1), (100.8, 1), (99.2, 1)] {
        check(sym(p1) == want, format!("100 -> {p1}: symbol {} expected {want}", sym(p1)))?;
    }
    let hs = load_price_csv(fixture("hs.csv")).map_err(|e| e.to_string())?;
    let dj = load_price_csv(fixture("dj.csv")).map_err(|e| e.to_string())?;
    let data = market_symbols(&hs, &dj, q).map_err(|e| e.to_string())?;
    let expected = |f: &str| std::fs::read_to_string(fixture("expected").join(f)).map_err(|e| e.to_string());
    let mut buf = Vec::new();
    write_symbol_csv(&data.dates, &data.early, &mut buf).map_err(|e| e.to_string())?;
    check(buf == expected("hs_symbols.csv")?.into_bytes(), "hs symbol file differs")?;
    let mut buf = Vec::new();
    write_symbol_csv(&data.dates, &data.late, &mut buf).map_err(|e| e.to_string())?;
    check(buf == expected("dj_symbols.csv")?.into_bytes(), "dj symbol file differs")?;
    let rows = market_state_summary(&data, "HS", "DJ", 1).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_state_summary_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
    check(buf == expected("summary.csv")?.into_bytes(), "summary table differs")?;
    for dir in ["DJ->HS", "HS->DJ"] {
        let total: f64 = rows.iter().filter(|r| r.direction == dir).map(|r| r.percent).sum();
        check((total - 100.0).abs() < 1e-9, format!("{dir} occupancy sums to {total}"))?;
    }
    Ok(format!("5 quantizer cases; {} symbols per market; {} summary rows identical", data.dates.len(), rows.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 8] = [
        ("AC1", ac1, Duration::from_secs(10)),
        ("AC2", ac2, Duration::from_secs(30)),
        ("AC3", ac3, Duration::from_secs(20)),
        ("AC4", ac4, Duration::from_secs(60)),
        ("AC5", ac5, Duration::from_secs(60)),
        ("AC6", ac6, Duration::from_secs(120)),
        ("AC7", ac7, Duration::from_secs(30)),
        ("AC8", ac8, Duration::from_secs(10)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, run, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => Err(format!("{msg}; runtime {elapsed:.1?} exceeds {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("{id} PASS ({elapsed:.1?}) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{id} FAIL ({elapsed:.1?}) {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
