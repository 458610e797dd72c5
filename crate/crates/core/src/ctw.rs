//! Krichevsky–Trofimov estimation and context-tree weighting.
//!
//! A [`ContextSchema`] says which past symbols make up the context at each
//! depth of the tree. Depth level `j` (1-based) looks `j` steps into the past:
//!
//! * without side information every level branches on the target's own
//!   context symbol;
//! * with side information and staleness `k`, levels `1..=k` branch on the
//!   target symbol alone and levels `k+1..=d+k` branch on the pair
//!   (target, side). `k = 0` is the fully coupled depth-`d` pair tree.
//!
//! Early in a sequence some levels have no symbol yet. Those levels take an
//! extra "absent" branch (index equal to the level's branching factor), and
//! every deeper level is absent as well. Paths therefore always run to full
//! depth, and the sequential predictions telescope exactly into the root
//! block probability from the very first step.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::info::{Alphabet, ProbDist, Symbol};

/// KT sequential estimate `(c_a + 1/2) / (N + m/2)`.
pub fn kt_predict(counts: &[u64], m: usize) -> ProbDist {
    assert!(m >= 2 && counts.len() == m, "kt_predict needs m >= 2 counts");
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + m as f64 / 2.0;
    let probs = counts.iter().map(|&c| (c as f64 + 0.5) / denom).collect();
    ProbDist::new(probs).expect("KT estimate is always a distribution")
}

/// `log2(2^a / 2 + 2^b / 2)` without leaving the log domain.
fn log2_mix(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2() - 1.0
}

/// Which past symbols form the context at each tree depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextSchema {
    target: Alphabet,
    target_context: Alphabet,
    side: Option<Alphabet>,
    depth: usize,
    staleness: usize,
}

impl ContextSchema {
    /// Depth-`d` tree over the target's own past.
    pub fn plain(target: Alphabet, depth: usize) -> Self {
        ContextSchema {
            target,
            target_context: target,
            side: None,
            depth,
            staleness: 0,
        }
    }

    /// Tree over target and side pasts; the most recent `staleness` side
    /// symbols are withheld, giving total depth `depth + staleness`.
    pub fn with_side(target: Alphabet, side: Alphabet, depth: usize, staleness: usize) -> Self {
        ContextSchema {
            target,
            target_context: target,
            side: Some(side),
            depth,
            staleness,
        }
    }

    /// Uses a different alphabet for the target's context symbols, e.g. the
    /// packed `(x, z)` pairs when conditioning on a third process.
    pub fn with_target_context(mut self, alphabet: Alphabet) -> Self {
        self.target_context = alphabet;
        self
    }

    pub fn target(&self) -> Alphabet {
        self.target
    }

    pub fn target_context(&self) -> Alphabet {
        self.target_context
    }

    pub fn side(&self) -> Option<Alphabet> {
        self.side
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn staleness(&self) -> usize {
        self.staleness
    }

    /// Number of levels below the root.
    pub fn total_depth(&self) -> usize {
        match self.side {
            Some(_) => self.depth + self.staleness,
            None => self.depth,
        }
    }

    /// Branching factor of level `level` (1-based), not counting the absent branch.
    pub fn branching(&self, level: usize) -> usize {
        debug_assert!(level >= 1 && level <= self.total_depth());
        match self.side {
            Some(side) if level > self.staleness => self.target_context.size() * side.size(),
            _ => self.target_context.size(),
        }
    }

    /// Leaves of the full tree, `L`.
    pub fn leaf_count(&self) -> u64 {
        (1..=self.total_depth()).map(|l| self.branching(l) as u64).product()
    }

    /// All nodes of the full tree including the root, `S`.
    pub fn node_count(&self) -> u64 {
        let mut width = 1u64;
        let mut total = 1u64;
        for l in 1..=self.total_depth() {
            width *= self.branching(l) as u64;
            total += width;
        }
        total
    }

    /// Context for predicting position `i` (0-based) of the target.
    ///
    /// `target_ctx` holds the target's context symbols (over
    /// [`target_context`](Self::target_context)) and `side` the side
    /// symbols; only positions before `i` are read.
    pub fn context(&self, i: usize, target_ctx: &[Symbol], side: Option<&[Symbol]>) -> Result<Context> {
        let total = self.total_depth();
        if self.side.is_some() != side.is_some() {
            return Err(Error::MalformedContext("side sequence presence does not match schema".into()));
        }
        let mut levels = Vec::with_capacity(total);
        for j in 1..=total {
            if j > i {
                levels.push(None);
                continue;
            }
            let t = *target_ctx
                .get(i - j)
                .ok_or_else(|| Error::MalformedContext(format!("target history shorter than {i}")))?;
            let sym = match (self.side, side) {
                (Some(sa), Some(s)) if j > self.staleness => {
                    let y = *s
                        .get(i - j)
                        .ok_or_else(|| Error::MalformedContext(format!("side history shorter than {i}")))?;
                    sa.check(y)?;
                    t * sa.size() + y
                }
                _ => t,
            };
            levels.push(Some(sym));
        }
        let ctx = Context { levels };
        self.validate(&ctx)?;
        Ok(ctx)
    }

    fn validate(&self, ctx: &Context) -> Result<()> {
        if ctx.levels.len() != self.total_depth() {
            return Err(Error::MalformedContext(format!(
                "expected {} levels, got {}",
                self.total_depth(),
                ctx.levels.len()
            )));
        }
        let mut absent = false;
        for (j, level) in ctx.levels.iter().enumerate() {
            match level {
                None => absent = true,
                Some(_) if absent => {
                    return Err(Error::MalformedContext(format!("level {} present below an absent level", j + 1)))
                }
                Some(s) if *s >= self.branching(j + 1) => {
                    return Err(Error::MalformedContext(format!(
                        "symbol {s} out of range at level {}",
                        j + 1
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn describe(&self) -> String {
        let side = self.side.map_or(0, |a| a.size());
        format!(
            "target={} target_context={} side={} depth={} staleness={}",
            self.target.size(),
            self.target_context.size(),
            side,
            self.depth,
            self.staleness
        )
    }
}

/// One branch choice per level, most recent first. `None` marks an absent level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    levels: Vec<Option<Symbol>>,
}

impl Context {
    pub fn new(levels: Vec<Option<Symbol>>) -> Self {
        Context { levels }
    }

    pub fn levels(&self) -> &[Option<Symbol>] {
        &self.levels
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    counts: Vec<u64>,
    log_pe: f64,
    log_pw: f64,
    children: Vec<(u32, u32)>,
}

impl Node {
    fn new(m: usize) -> Self {
        Node {
            counts: vec![0; m],
            log_pe: 0.0,
            log_pw: 0.0,
            children: Vec::new(),
        }
    }

    fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// KT block probability after one more `symbol`.
    fn log_pe_after(&self, symbol: Symbol) -> f64 {
        let m = self.counts.len() as f64;
        self.log_pe + ((self.counts[symbol] as f64 + 0.5) / (self.total() as f64 + m / 2.0)).log2()
    }

    fn child(&self, branch: usize) -> Option<usize> {
        self.children
            .iter()
            .find(|(b, _)| *b as usize == branch)
            .map(|&(_, idx)| idx as usize)
    }
}

/// A context-tree-weighting sequential predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTree {
    schema: ContextSchema,
    nodes: Vec<Node>,
}

const DUMP_MAGIC: &str = "pathcausal-ctw 1";

impl ContextTree {
    pub fn new(schema: ContextSchema) -> Self {
        ContextTree {
            nodes: vec![Node::new(schema.target.size())],
            schema,
        }
    }

    pub fn schema(&self) -> &ContextSchema {
        &self.schema
    }

    /// Nodes allocated so far (including absent-branch nodes).
    pub fn allocated_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `log2` of the weighted block probability of everything observed.
    pub fn log2_block_prob(&self) -> f64 {
        self.nodes[0].log_pw
    }

    /// Symbols observed so far.
    pub fn observed(&self) -> u64 {
        self.nodes[0].total()
    }

    fn branch_index(&self, level: usize, choice: Option<Symbol>) -> usize {
        choice.unwrap_or_else(|| self.schema.branching(level))
    }

    /// Existing nodes along the context path; `None` where not yet allocated.
    fn path(&self, ctx: &Context) -> Vec<Option<usize>> {
        let mut path = Vec::with_capacity(ctx.levels.len() + 1);
        let mut cur = Some(0);
        path.push(cur);
        for (j, &choice) in ctx.levels.iter().enumerate() {
            let branch = self.branch_index(j + 1, choice);
            cur = cur.and_then(|idx| self.nodes[idx].child(branch));
            path.push(cur);
        }
        path
    }

    fn children_log_sum(&self, idx: usize) -> f64 {
        self.nodes[idx].children.iter().map(|&(_, c)| self.nodes[c as usize].log_pw).sum()
    }

    /// Root `log2 p_w` if `symbol` were appended under `ctx`.
    fn hypothetical_root(&self, ctx: &Context, path: &[Option<usize>], symbol: Symbol) -> f64 {
        let m = self.schema.target.size();
        let fresh = Node::new(m);
        let depth = ctx.levels.len();
        let mut below_old = 0.0;
        let mut below_new = 0.0;
        for level in (0..=depth).rev() {
            let node = path[level].map_or(&fresh, |idx| &self.nodes[idx]);
            let pe_new = node.log_pe_after(symbol);
            let (old, new) = if level == depth {
                (node.log_pw, pe_new)
            } else {
                let others = path[level].map_or(0.0, |idx| self.children_log_sum(idx)) - below_old;
                (node.log_pw, log2_mix(pe_new, others + below_new))
            };
            below_old = old;
            below_new = new;
        }
        below_new
    }

    /// One-step predictive distribution under `ctx`; every entry is positive.
    pub fn predict(&self, ctx: &Context) -> Result<ProbDist> {
        self.schema.validate(ctx)?;
        let path = self.path(ctx);
        let root = self.nodes[0].log_pw;
        let m = self.schema.target.size();
        let weights: Vec<f64> = (0..m)
            .map(|a| (self.hypothetical_root(ctx, &path, a) - root).exp2())
            .collect();
        ProbDist::from_weights(weights)
    }

    /// Records `symbol` under `ctx`, updating only the nodes on its path.
    pub fn observe(&mut self, ctx: &Context, symbol: Symbol) -> Result<()> {
        self.schema.validate(ctx)?;
        self.schema.target.check(symbol)?;
        let m = self.schema.target.size();
        let mut path = Vec::with_capacity(ctx.levels.len() + 1);
        let mut cur = 0usize;
        path.push(cur);
        for (j, &choice) in ctx.levels.iter().enumerate() {
            let branch = self.branch_index(j + 1, choice);
            cur = match self.nodes[cur].child(branch) {
                Some(c) => c,
                None => {
                    let idx = self.nodes.len();
                    self.nodes.push(Node::new(m));
                    self.nodes[cur].children.push((branch as u32, idx as u32));
                    idx
                }
            };
            path.push(cur);
        }
        let depth = ctx.levels.len();
        for level in (0..=depth).rev() {
            let idx = path[level];
            let pe = self.nodes[idx].log_pe_after(symbol);
            let node = &mut self.nodes[idx];
            node.log_pe = pe;
            node.counts[symbol] += 1;
            self.nodes[idx].log_pw = if level == depth {
                pe
            } else {
                log2_mix(pe, self.children_log_sum(idx))
            };
        }
        Ok(())
    }

    /// Text snapshot: a header, the schema, then one `path : counts` record
    /// per allocated node. Paths list branch indices from the root, `_`
    /// standing for the absent branch; the root's path is `-`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{DUMP_MAGIC}").unwrap();
        writeln!(out, "schema {}", self.schema.describe()).unwrap();
        let mut stack: Vec<(usize, Vec<String>)> = vec![(0, Vec::new())];
        while let Some((idx, path)) = stack.pop() {
            let node = &self.nodes[idx];
            let label = if path.is_empty() { "-".to_string() } else { path.join(".") };
            let counts: Vec<String> = node.counts.iter().map(u64::to_string).collect();
            writeln!(out, "{label} : {}", counts.join(" ")).unwrap();
            let level = path.len() + 1;
            let mut kids = node.children.clone();
            kids.sort_unstable();
            for &(branch, child) in kids.iter().rev() {
                let mut p = path.clone();
                if level <= self.schema.total_depth() && branch as usize == self.schema.branching(level) {
                    p.push("_".into());
                } else {
                    p.push(branch.to_string());
                }
                stack.push((child as usize, p));
            }
        }
        out
    }

    /// Rebuilds a tree from [`dump`](Self::dump) output, recomputing all
    /// probabilities from the stored counts.
    pub fn from_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(DUMP_MAGIC) {
            return Err(Error::Parse("missing ctw dump header".into()));
        }
        let schema = parse_schema(lines.next().unwrap_or(""))?;
        let mut tree = ContextTree::new(schema);
        let m = schema.target.size();
        let mut seen_root = false;
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse(format!("dump line {}: {msg}", lineno + 3));
            let (path, counts) = line.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let counts: Vec<u64> = counts
                .split_whitespace()
                .map(|c| c.parse().map_err(|_| bad("bad count")))
                .collect::<Result<_>>()?;
            if counts.len() != m {
                return Err(bad("wrong number of counts"));
            }
            let path = path.trim();
            let mut cur = 0usize;
            if path == "-" {
                seen_root = true;
            } else {
                for (j, part) in path.split('.').enumerate() {
                    let level = j + 1;
                    if level > schema.total_depth() {
                        return Err(bad("path deeper than schema"));
                    }
                    let branch = if part == "_" {
                        schema.branching(level)
                    } else {
                        let b: usize = part.parse().map_err(|_| bad("bad branch"))?;
                        if b >= schema.branching(level) {
                            return Err(bad("branch out of range"));
                        }
                        b
                    };
                    cur = match tree.nodes[cur].child(branch) {
                        Some(c) => c,
                        None => {
                            let idx = tree.nodes.len();
                            tree.nodes.push(Node::new(m));
                            tree.nodes[cur].children.push((branch as u32, idx as u32));
                            idx
                        }
                    };
                }
            }
            tree.nodes[cur].counts = counts;
        }
        if !seen_root {
            return Err(Error::Parse("dump has no root record".into()));
        }
        tree.recompute(0, 0)?;
        Ok(tree)
    }

    fn recompute(&mut self, idx: usize, level: usize) -> Result<()> {
        let m = self.schema.target.size();
        let counts = self.nodes[idx].counts.clone();
        let mut log_pe = 0.0;
        for &c in &counts {
            for j in 0..c {
                log_pe += (j as f64 + 0.5).log2();
            }
        }
        let total: u64 = counts.iter().sum();
        for t in 0..total {
            log_pe -= (t as f64 + m as f64 / 2.0).log2();
        }
        self.nodes[idx].log_pe = log_pe;
        if level == self.schema.total_depth() {
            self.nodes[idx].log_pw = log_pe;
            return Ok(());
        }
        let kids: Vec<usize> = self.nodes[idx].children.iter().map(|&(_, c)| c as usize).collect();
        let mut sums = vec![0u64; m];
        for &c in &kids {
            self.recompute(c, level + 1)?;
            for (s, v) in sums.iter_mut().zip(&self.nodes[c].counts) {
                *s += v;
            }
        }
        if sums != counts {
            return Err(Error::Parse("node counts differ from the sum over its children".into()));
        }
        self.nodes[idx].log_pw = log2_mix(log_pe, self.children_log_sum(idx));
        Ok(())
    }
}

fn parse_schema(line: &str) -> Result<ContextSchema> {
    let rest = line
        .strip_prefix("schema ")
        .ok_or_else(|| Error::Parse("missing schema line".into()))?;
    let mut vals = std::collections::HashMap::new();
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad schema field {kv}")))?;
        let v: usize = v.parse().map_err(|_| Error::Parse(format!("bad schema value {kv}")))?;
        vals.insert(k.to_string(), v);
    }
    let get = |k: &str| vals.get(k).copied().ok_or_else(|| Error::Parse(format!("schema lacks {k}")));
    let target = Alphabet::new(get("target")?)?;
    let tctx = Alphabet::new(get("target_context")?)?;
    let side = get("side")?;
    let schema = if side == 0 {
        ContextSchema::plain(target, get("depth")?)
    } else {
        ContextSchema::with_side(target, Alphabet::new(side)?, get("depth")?, get("staleness")?)
    };
    Ok(schema.with_target_context(tctx))
}

/// CTW worst-case regret without side information, in bits:
/// `((m-1)L/2) log2(n/L) + L (m/(m-1) + log2 m) - 1/(m-1)`.
pub fn regret_bound_plain(m: usize, leaves: u64, n: u64) -> Result<f64> {
    check_bound_args(m, leaves, n)?;
    let (mf, l) = (m as f64, leaves as f64);
    Ok((mf - 1.0) * l / 2.0 * (n as f64 / l).log2() + l * (mf / (mf - 1.0) + mf.log2()) - 1.0 / (mf - 1.0))
}

/// CTW worst-case regret for a tree that also branches on side information:
/// `((m-1)L/2) log2(n/L) + L (m-1) + S`.
pub fn regret_bound_side_info(m: usize, leaves: u64, nodes: u64, n: u64) -> Result<f64> {
    check_bound_args(m, leaves, n)?;
    if nodes < leaves {
        return Err(Error::InvalidParameter(format!("node count {nodes} below leaf count {leaves}")));
    }
    let (mf, l) = (m as f64, leaves as f64);
    Ok((mf - 1.0) * l / 2.0 * (n as f64 / l).log2() + l * (mf - 1.0) + nodes as f64)
}

fn check_bound_args(m: usize, leaves: u64, n: u64) -> Result<()> {
    if m < 2 {
        return Err(Error::AlphabetTooSmall(m));
    }
    if leaves == 0 {
        return Err(Error::InvalidParameter("leaf count must be positive".into()));
    }
    if n < leaves {
        return Err(Error::HorizonTooShort { n, leaves });
    }
    Ok(())
}

/// A regret bound together with the parameters that produced it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegretBudget {
    pub alphabet_size: usize,
    pub leaves: u64,
    pub nodes: Option<u64>,
    pub horizon: u64,
    pub bound_bits: f64,
}

impl RegretBudget {
    pub fn plain(m: usize, leaves: u64, n: u64) -> Result<Self> {
        Ok(RegretBudget {
            alphabet_size: m,
            leaves,
            nodes: None,
            horizon: n,
            bound_bits: regret_bound_plain(m, leaves, n)?,
        })
    }

    pub fn side_info(m: usize, leaves: u64, nodes: u64, n: u64) -> Result<Self> {
        Ok(RegretBudget {
            alphabet_size: m,
            leaves,
            nodes: Some(nodes),
            horizon: n,
            bound_bits: regret_bound_side_info(m, leaves, nodes, n)?,
        })
    }

    /// The bound a schema's predictor carries at horizon `n`.
    pub fn for_schema(schema: &ContextSchema, n: u64) -> Result<Self> {
        let m = schema.target().size();
        match schema.side() {
            Some(_) => Self::side_info(m, schema.leaf_count(), schema.node_count(), n),
            None => Self::plain(m, schema.leaf_count(), n),
        }
    }

    /// Same parameters at a different horizon.
    pub fn at(&self, n: u64) -> Result<Self> {
        match self.nodes {
            Some(s) => Self::side_info(self.alphabet_size, self.leaves, s, n),
            None => Self::plain(self.alphabet_size, self.leaves, n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn a(m: usize) -> Alphabet {
        Alphabet::new(m).unwrap()
    }

    /// Straight-from-the-definition CTW: groups the whole history by context
    /// prefix and evaluates the recursion from scratch.
    fn reference_log_pw(schema: &ContextSchema, paths: &[(Vec<usize>, Symbol)]) -> f64 {
        fn kt_block(symbols: &[Symbol], m: usize) -> f64 {
            let mut counts = vec![0u64; m];
            let mut lp = 0.0;
            for (t, &s) in symbols.iter().enumerate() {
                lp += ((counts[s] as f64 + 0.5) / (t as f64 + m as f64 / 2.0)).log2();
                counts[s] += 1;
            }
            lp
        }
        fn rec(schema: &ContextSchema, items: &[&(Vec<usize>, Symbol)], level: usize) -> f64 {
            let m = schema.target().size();
            let syms: Vec<Symbol> = items.iter().map(|(_, s)| *s).collect();
            let pe = kt_block(&syms, m);
            if level == schema.total_depth() {
                return pe;
            }
            let mut groups: HashMap<usize, Vec<&(Vec<usize>, Symbol)>> = HashMap::new();
            for it in items {
                groups.entry(it.0[level]).or_default().push(it);
            }
            let kids: f64 = groups.values().map(|g| rec(schema, g, level + 1)).sum();
            let (p1, p2) = (pe.exp2(), kids.exp2());
            (0.5 * p1 + 0.5 * p2).log2()
        }
        let items: Vec<_> = paths.iter().collect();
        rec(schema, &items, 0)
    }

    fn branch_path(schema: &ContextSchema, ctx: &Context) -> Vec<usize> {
        ctx.levels()
            .iter()
            .enumerate()
            .map(|(j, c)| c.unwrap_or(schema.branching(j + 1)))
            .collect()
    }

    #[test]
    fn kt_examples() {
        assert_eq!(kt_predict(&[0, 0], 2).probs(), &[0.5, 0.5]);
        let p = kt_predict(&[3, 1], 2);
        assert!((p.prob(0) - 0.7).abs() < 1e-15 && (p.prob(1) - 0.3).abs() < 1e-15);
        for &v in kt_predict(&[0, 0, 0], 3).probs() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fresh_tree_is_uniform() {
        let schema = ContextSchema::with_side(a(3), a(3), 1, 1);
        let tree = ContextTree::new(schema);
        let ctx = Context::new(vec![Some(2), Some(7)]);
        for &v in tree.predict(&ctx).unwrap().probs() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn leaf_and_node_counts() {
        let s = ContextSchema::with_side(a(3), a(3), 1, 1);
        assert_eq!((s.leaf_count(), s.node_count()), (27, 31));
        let s = ContextSchema::with_side(a(3), a(3), 1, 0);
        assert_eq!((s.leaf_count(), s.node_count()), (9, 10));
        let s = ContextSchema::plain(a(3), 1);
        assert_eq!((s.leaf_count(), s.node_count()), (3, 4));
        let s = ContextSchema::plain(a(2), 0);
        assert_eq!((s.leaf_count(), s.node_count()), (1, 1));
    }

    #[test]
    fn context_layout() {
        let s = ContextSchema::with_side(a(3), a(3), 1, 1);
        let x = [2, 1, 0];
        let y = [1, 2, 2];
        // predicting x[2]: level 1 = x[1]; level 2 = (x[0], y[0]).
        let ctx = s.context(2, &x, Some(&y)).unwrap();
        assert_eq!(ctx.levels(), &[Some(1), Some(2 * 3 + 1)]);
        let ctx = s.context(1, &x, Some(&y)).unwrap();
        assert_eq!(ctx.levels(), &[Some(2), None]);
        let ctx = s.context(0, &x, Some(&y)).unwrap();
        assert_eq!(ctx.levels(), &[None, None]);
        let s0 = ContextSchema::with_side(a(3), a(3), 1, 0);
        assert_eq!(s0.context(2, &x, Some(&y)).unwrap().levels(), &[Some(3 + 2)]);
    }

    #[test]
    fn malformed_contexts_rejected() {
        let s = ContextSchema::plain(a(2), 2);
        let mut tree = ContextTree::new(s);
        for bad in [vec![Some(0)], vec![None, Some(1)], vec![Some(2), Some(0)]] {
            let ctx = Context::new(bad);
            assert!(matches!(tree.predict(&ctx), Err(Error::MalformedContext(_))));
            assert!(matches!(tree.observe(&ctx, 0), Err(Error::MalformedContext(_))));
        }
        assert!(s.context(1, &[0], Some(&[0])).is_err());
    }

    #[test]
    fn depth_one_alternating_stream() {
        // 0 1 0 1 ...: after eight observations under context 0 (all of them
        // followed by 1) the leaf KT gives 8.5/9 for symbol 1.
        let s = ContextSchema::plain(a(2), 1);
        let mut tree = ContextTree::new(s);
        let x: Vec<usize> = (0..17).map(|i| i % 2).collect();
        let mut paths = Vec::new();
        for i in 0..x.len() {
            let ctx = s.context(i, &x, None).unwrap();
            paths.push((branch_path(&s, &ctx), x[i]));
            tree.observe(&ctx, x[i]).unwrap();
        }
        let leaf_counts = [0u64, 8];
        assert!((kt_predict(&leaf_counts, 2).prob(1) - 8.5 / 9.0).abs() < 1e-15);
        // Root mixture checked against the reference recursion.
        let ctx = s.context(x.len(), &[x.clone(), vec![0]].concat(), None).unwrap();
        assert_eq!(ctx.levels(), &[Some(0)]);
        let p = tree.predict(&ctx).unwrap();
        let base = reference_log_pw(&s, &paths);
        let mut with_one = paths.clone();
        with_one.push((vec![0], 1));
        let expected = (reference_log_pw(&s, &with_one) - base).exp2();
        assert!((p.prob(1) - expected).abs() < 1e-12);
        assert!(p.prob(1) > 0.8);
    }

    #[test]
    fn matches_reference_recursion_on_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let schema = if trial % 2 == 0 {
                ContextSchema::plain(a(2 + trial % 3), 1 + trial % 3)
            } else {
                ContextSchema::with_side(a(2), a(2 + trial % 2), 1 + trial % 2, trial % 3)
            };
            let m = schema.target().size();
            let ms = schema.side().map_or(2, |s| s.size());
            let n = 10;
            let x: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
            let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..ms)).collect();
            let side = schema.side().map(|_| y.as_slice());
            let mut tree = ContextTree::new(schema);
            let mut paths = Vec::new();
            for i in 0..n {
                let ctx = schema.context(i, &x, side).unwrap();
                let path = branch_path(&schema, &ctx);
                let p = tree.predict(&ctx).unwrap();
                let base = reference_log_pw(&schema, &paths);
                for s in 0..m {
                    let mut ext = paths.clone();
                    ext.push((path.clone(), s));
                    let want = (reference_log_pw(&schema, &ext) - base).exp2();
                    assert!((p.prob(s) - want).abs() < 1e-12, "trial {trial} step {i}");
                }
                tree.observe(&ctx, x[i]).unwrap();
                paths.push((path, x[i]));
            }
            assert!((tree.log2_block_prob() - reference_log_pw(&schema, &paths)).abs() < 1e-10);
        }
    }

    #[test]
    fn telescoping_and_determinism() {
        let s = ContextSchema::with_side(a(3), a(2), 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<usize> = (0..500).map(|_| rng.gen_range(0..3)).collect();
        let y: Vec<usize> = (0..500).map(|_| rng.gen_range(0..2)).collect();
        let mut t1 = ContextTree::new(s);
        let mut t2 = ContextTree::new(s);
        let mut loss = 0.0;
        for i in 0..x.len() {
            let ctx = s.context(i, &x, Some(&y)).unwrap();
            let p = t1.predict(&ctx).unwrap();
            assert!(p.probs().iter().all(|&v| v > 0.0));
            loss += p.prob(x[i]).log2();
            t1.observe(&ctx, x[i]).unwrap();
            t2.observe(&ctx, x[i]).unwrap();
        }
        assert!((loss - t1.log2_block_prob()).abs() < 1e-9);
        assert_eq!(t1, t2);
    }

    #[test]
    fn uniform_stream_costs_about_one_bit() {
        let s = ContextSchema::plain(a(2), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4096);
        let x: Vec<usize> = (0..4096).map(|_| rng.gen_range(0..2)).collect();
        let mut tree = ContextTree::new(s);
        let mut loss = 0.0;
        for i in 0..x.len() {
            let ctx = s.context(i, &x, None).unwrap();
            loss -= tree.predict(&ctx).unwrap().prob(x[i]).log2();
            tree.observe(&ctx, x[i]).unwrap();
        }
        assert!((loss / x.len() as f64 - 1.0).abs() < 0.05);
    }

    #[test]
    fn depth_zero_is_kt() {
        let s = ContextSchema::plain(a(3), 0);
        let mut tree = ContextTree::new(s);
        let x = [0, 2, 2, 1, 2, 0, 2];
        let mut counts = [0u64; 3];
        for &sym in &x {
            let ctx = s.context(0, &[], None).unwrap();
            let p = tree.predict(&ctx).unwrap();
            let q = kt_predict(&counts, 3);
            for k in 0..3 {
                assert!((p.prob(k) - q.prob(k)).abs() < 1e-14);
            }
            tree.observe(&ctx, sym).unwrap();
            counts[sym] += 1;
        }
    }

    #[test]
    fn dump_round_trip() {
        let s = ContextSchema::with_side(a(3), a(3), 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<usize> = (0..300).map(|_| rng.gen_range(0..3)).collect();
        let y: Vec<usize> = (0..300).map(|_| rng.gen_range(0..3)).collect();
        let mut tree = ContextTree::new(s);
        for i in 0..x.len() {
            let ctx = s.context(i, &x, Some(&y)).unwrap();
            tree.observe(&ctx, x[i]).unwrap();
        }
        let text = tree.dump();
        let back = ContextTree::from_dump(&text).unwrap();
        assert_eq!(back.dump(), text);
        assert!((back.log2_block_prob() - tree.log2_block_prob()).abs() < 1e-9);
        let ctx = Context::new(vec![Some(1), Some(5)]);
        let (p, q) = (tree.predict(&ctx).unwrap(), back.predict(&ctx).unwrap());
        for k in 0..3 {
            assert!((p.prob(k) - q.prob(k)).abs() < 1e-12);
        }
        assert!(ContextTree::from_dump("garbage").is_err());
        let broken = text.replacen("- : ", "- : 1 ", 1);
        assert!(ContextTree::from_dump(&broken).is_err());
    }

    #[test]
    fn regret_bound_values() {
        let plain = regret_bound_plain(3, 3, 10_000).unwrap();
        // Second evaluation written out term by term.
        let alt = 3.0 * (10_000f64 / 3.0).ln() / std::f64::consts::LN_2 + 3.0 * 1.5 + 3.0 * 3f64.ln() / 2f64.ln() - 0.5;
        assert!((plain - alt).abs() < 1e-12);
        assert!((plain - 43.86).abs() < 5e-3);
        assert!(regret_bound_plain(3, 3, 20_000).unwrap() > plain);
        assert!((regret_bound_plain(2, 1, 1).unwrap() - 2.0).abs() < 1e-15);

        let side = regret_bound_side_info(3, 9, 10, 10_000).unwrap();
        assert!((side - 119.06).abs() < 5e-3);
        let stale = regret_bound_side_info(3, 27, 31, 50_000).unwrap();
        let alt = 27.0 * (50_000f64 / 27.0).log2() + 54.0 + 31.0;
        assert!((stale - alt).abs() < 1e-12);

        assert_eq!(regret_bound_plain(3, 3, 2), Err(Error::HorizonTooShort { n: 2, leaves: 3 }));
        assert!(regret_bound_side_info(3, 9, 8, 100).is_err());
        // Leaf-only tree: the two bounds differ only in their additive terms.
        let (p, s) = (regret_bound_plain(3, 9, 1000).unwrap(), regret_bound_side_info(3, 9, 9, 1000).unwrap());
        assert!(((s - p) - (9.0 * 2.0 + 9.0 - 9.0 * (1.5 + 3f64.log2()) + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn budget_monotone_in_horizon() {
        let b = RegretBudget::side_info(3, 27, 31, 27).unwrap();
        let mut last = b.bound_bits;
        for n in [100, 1000, 10_000, 100_000] {
            let v = b.at(n).unwrap().bound_bits;
            assert!(v >= last);
            last = v;
        }
    }
}
