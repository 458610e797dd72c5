//! Time-unrolled Bayesian networks for joint Markov models, d-separation,
//! and the Markovicity classification of the target process.
//!
//! A node is one process at one time (`X:3`). Edges always point forward in
//! time with lag at most the model order; there are no instantaneous edges.
//! Edge `S_{i-l} -> S'_i` is present iff
//! `I(S_{i-l}; S'_i | window \ S_{i-l}) > EDGE_THRESHOLD` under the
//! stationary law. Stationarity makes the pattern time-invariant, so it is
//! computed once at an interior time and replicated over the horizon.
//!
//! The replicated pattern is an exact I-map whenever the first window is a
//! product law (e.g. [`JointMarkovModel::with_uniform_initial`]); under the
//! stationary initial law the first `d` time steps are an approximation and
//! separation claims should be read at interior times `i > 2d`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::conditional_mutual_information;
use crate::markov::{path_distribution, stationary_path_distribution, JointMarkovModel, JointSymbol};

/// Conditional MI (bits) above which a dependence counts as present.
pub const EDGE_THRESHOLD: f64 = 1e-9;

/// Upper bound on `horizon * processes` for an unrolled graph.
pub const MAX_GRAPH_NODES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Process {
    X,
    Y,
    Z,
}

impl Process {
    fn of(self, s: JointSymbol) -> usize {
        match self {
            Process::X => s.x,
            Process::Y => s.y,
            Process::Z => s.z,
        }
    }

    fn set(self, s: &mut JointSymbol, v: usize) {
        match self {
            Process::X => s.x = v,
            Process::Y => s.y = v,
            Process::Z => s.z = v,
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Process::X => "X",
            Process::Y => "Y",
            Process::Z => "Z",
        })
    }
}

/// One process at one (1-based) time. Ordered by time, then process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Node {
    pub time: usize,
    pub process: Process,
}

impl Node {
    pub fn new(process: Process, time: usize) -> Self {
        Node { time, process }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.process, self.time)
    }
}

/// A set of nodes supplied to [`d_separated`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeSet(BTreeSet<Node>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet::default()
    }

    pub fn insert(&mut self, n: Node) -> bool {
        self.0.insert(n)
    }

    pub fn contains(&self, n: &Node) -> bool {
        self.0.contains(n)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Node> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }
}

impl FromIterator<Node> for NodeSet {
    fn from_iter<I: IntoIterator<Item = Node>>(iter: I) -> Self {
        NodeSet(iter.into_iter().collect())
    }
}

/// Directed acyclic graph over `(process, time)` nodes for `time in 1..=horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnrolledDag {
    processes: Vec<Process>,
    horizon: usize,
    max_lag: usize,
    parents: BTreeMap<Node, BTreeSet<Node>>,
}

impl UnrolledDag {
    /// Edgeless graph. `max_lag` bounds `to.time - from.time` for later edges.
    pub fn new(processes: &[Process], horizon: usize, max_lag: usize) -> Result<Self> {
        let mut procs = processes.to_vec();
        procs.sort_unstable();
        procs.dedup();
        if procs.is_empty() || horizon == 0 || max_lag == 0 {
            return Err(Error::InvalidParameter(
                "unrolled graph needs a process, horizon >= 1 and max lag >= 1".into(),
            ));
        }
        if horizon.saturating_mul(procs.len()) > MAX_GRAPH_NODES {
            return Err(Error::InstanceTooLarge(format!("{horizon} time steps x {} processes", procs.len())));
        }
        let parents = (1..=horizon)
            .flat_map(|t| procs.iter().map(move |&p| (Node::new(p, t), BTreeSet::new())))
            .collect();
        Ok(UnrolledDag { processes: procs, horizon, max_lag, parents })
    }

    /// Adds `from -> to`; rejects unknown nodes and edges that are not
    /// strictly forward in time within `max_lag`.
    pub fn add_edge(&mut self, from: Node, to: Node) -> Result<()> {
        self.check_node(&from)?;
        self.check_node(&to)?;
        let lag = to.time.saturating_sub(from.time);
        if lag == 0 || lag > self.max_lag {
            return Err(Error::InvalidParameter(format!(
                "edge {from} -> {to} must go forward in time by 1..={} steps",
                self.max_lag
            )));
        }
        self.parents.get_mut(&to).expect("checked").insert(from);
        Ok(())
    }

    fn check_node(&self, n: &Node) -> Result<()> {
        if self.parents.contains_key(n) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("node {n} is not in the graph")))
        }
    }

    pub fn processes(&self) -> &[Process] {
        &self.processes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.parents.keys().copied()
    }

    pub fn parents(&self, n: &Node) -> Option<&BTreeSet<Node>> {
        self.parents.get(n)
    }

    pub fn has_edge(&self, from: Node, to: Node) -> bool {
        self.parents.get(&to).is_some_and(|p| p.contains(&from))
    }

    /// All edges sorted by `(from, to)`.
    pub fn edges(&self) -> Vec<(Node, Node)> {
        let mut out: Vec<_> = self
            .parents
            .iter()
            .flat_map(|(&to, ps)| ps.iter().map(move |&from| (from, to)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.values().map(BTreeSet::len).sum()
    }

    /// One `X:3 -> X:4` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for (from, to) in self.edges() {
            writeln!(w, "{from} -> {to}")?;
        }
        Ok(())
    }

    pub fn edge_list(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }
}

/// Whether `c` d-separates `a` from `b`: restrict to the ancestral subgraph
/// of `a ∪ b ∪ c`, moralize, drop `c`, and search for an undirected path.
pub fn d_separated(dag: &UnrolledDag, a: &NodeSet, b: &NodeSet, c: &NodeSet) -> Result<bool> {
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::NotDisjoint);
    }
    for n in a.iter().chain(b.iter()).chain(c.iter()) {
        dag.check_node(n)?;
    }
    // Ancestral closure.
    let mut ancestral: BTreeSet<Node> = BTreeSet::new();
    let mut stack: Vec<Node> = a.iter().chain(b.iter()).chain(c.iter()).copied().collect();
    while let Some(n) = stack.pop() {
        if ancestral.insert(n) {
            stack.extend(dag.parents[&n].iter().copied());
        }
    }
    // Moral graph, undirected.
    let mut adj: BTreeMap<Node, BTreeSet<Node>> = ancestral.iter().map(|&n| (n, BTreeSet::new())).collect();
    let link = |u: Node, v: Node, adj: &mut BTreeMap<Node, BTreeSet<Node>>| {
        adj.get_mut(&u).expect("ancestral").insert(v);
        adj.get_mut(&v).expect("ancestral").insert(u);
    };
    for &child in &ancestral {
        let ps: Vec<Node> = dag.parents[&child].iter().copied().collect();
        for (i, &p) in ps.iter().enumerate() {
            link(p, child, &mut adj);
            for &q in &ps[i + 1..] {
                link(p, q, &mut adj);
            }
        }
    }
    // Remove the conditioning set and search.
    let mut seen: BTreeSet<Node> = a.iter().copied().collect();
    let mut queue: VecDeque<Node> = a.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        if b.contains(&n) {
            return Ok(false);
        }
        for &m in &adj[&n] {
            if !c.contains(&m) && seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    Ok(true)
}

/// One lag-`lag` dependency `source_{i-lag} -> target_i` with its conditional MI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeStrength {
    pub source: Process,
    pub lag: usize,
    pub target: Process,
    pub cmi_bits: f64,
}

fn model_processes(model: &JointMarkovModel) -> Vec<Process> {
    let mut p = vec![Process::X, Process::Y];
    if model.has_z() {
        p.push(Process::Z);
    }
    p
}

/// Conditional MI of every candidate edge, evaluated on stationary paths of
/// length `d + 1`.
pub fn edge_strengths(model: &JointMarkovModel) -> Result<Vec<EdgeStrength>> {
    let d = model.order();
    let j = model.joint_size();
    let paths = stationary_path_distribution(model, d + 1)?;
    let procs = model_processes(model);
    let mut out = Vec::new();
    for &source in &procs {
        for lag in 1..=d {
            for &target in &procs {
                let entries = paths.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(u, &p)| {
                    let current = model.joint_symbol(u % j);
                    let mut window = model.decode(u / j);
                    let pos = d - lag;
                    let a = source.of(window[pos]);
                    source.set(&mut window[pos], 0);
                    let rest = model.encode(&window).expect("decoded window re-encodes");
                    (p, a as u64, target.of(current) as u64, rest as u64)
                });
                out.push(EdgeStrength { source, lag, target, cmi_bits: conditional_mutual_information(entries) });
            }
        }
    }
    Ok(out)
}

/// Unrolled network over times `1..=horizon` with the model's stationary
/// edge pattern replicated at every time where the source exists.
pub fn build_unrolled_network(model: &JointMarkovModel, horizon: usize) -> Result<UnrolledDag> {
    let pattern: Vec<EdgeStrength> = edge_strengths(model)?
        .into_iter()
        .filter(|e| e.cmi_bits > EDGE_THRESHOLD)
        .collect();
    let mut dag = UnrolledDag::new(&model_processes(model), horizon, model.order())?;
    for t in 1..=horizon {
        for e in &pattern {
            if e.lag < t {
                dag.add_edge(Node::new(e.source, t - e.lag), Node::new(e.target, t))?;
            }
        }
    }
    Ok(dag)
}

/// Which law the path enumeration in [`node_set_cmi`] starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLaw {
    Initial,
    Stationary,
}

/// Exact `I(A; B | C)` in bits between node sets over times `1..=horizon`,
/// by enumeration of all joint paths.
pub fn node_set_cmi(
    model: &JointMarkovModel,
    horizon: usize,
    law: PathLaw,
    a: &NodeSet,
    b: &NodeSet,
    c: &NodeSet,
) -> Result<f64> {
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::NotDisjoint);
    }
    let procs = model_processes(model);
    for n in a.iter().chain(b.iter()).chain(c.iter()) {
        if n.time == 0 || n.time > horizon || !procs.contains(&n.process) {
            return Err(Error::InvalidParameter(format!("node {n} outside the model's horizon {horizon}")));
        }
    }
    let radix = |p: Process| match p {
        Process::X => model.x_alphabet().size(),
        Process::Y => model.y_alphabet().size(),
        Process::Z => model.z_alphabet().map_or(1, |a| a.size()),
    } as u64;
    for set in [a, b, c] {
        set.iter()
            .try_fold(1u64, |acc, n| acc.checked_mul(radix(n.process)))
            .ok_or_else(|| Error::InstanceTooLarge(format!("{} nodes in one set", set.len())))?;
    }
    let paths = match law {
        PathLaw::Initial => path_distribution(model, horizon)?,
        PathLaw::Stationary => stationary_path_distribution(model, horizon)?,
    };
    let j = model.joint_size();
    let code = |set: &NodeSet, path: &[JointSymbol]| {
        set.iter()
            .fold(0u64, |acc, n| acc * radix(n.process) + n.process.of(path[n.time - 1]) as u64)
    };
    let mut path = vec![JointSymbol::default(); horizon];
    let entries = paths.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(u, &p)| {
        let mut rest = u;
        for slot in path.iter_mut().rev() {
            *slot = model.joint_symbol(rest % j);
            rest /= j;
        }
        (p, code(a, &path), code(b, &path), code(c, &path))
    });
    Ok(conditional_mutual_information(entries.collect::<Vec<_>>()))
}

/// The three Markovicity classes for the target `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Markovicity {
    /// No `Y -> X` edge: directed information is zero and `X` is
    /// conditionally `d`-Markov given `Z`.
    ConditionallyDMarkov,
    /// `Y -> X` edges exist but no two `Y` times are dependent given the
    /// `(X, Z)` history: `X` is conditionally Markov of order at most `2d`.
    #[serde(rename = "markov-order-at-most-2d")]
    MarkovOrderAtMost2d,
    /// Neither holds: no lag `l` makes `(X, Z)_{i-l}^{i-1}` d-separate `X_i`
    /// from the older `(X, Z)` past in the constructed graph.
    NoFiniteOrder,
}

impl fmt::Display for Markovicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Markovicity::ConditionallyDMarkov => "conditionally-d-markov",
            Markovicity::MarkovOrderAtMost2d => "markov-order-at-most-2d",
            Markovicity::NoFiniteOrder => "no-finite-order",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovicityReport {
    pub class: Markovicity,
    pub order: usize,
    /// Path length used for the `Y`-pair test (`2d + 1`).
    pub test_horizon: usize,
    pub y_to_x_edges: Vec<EdgeStrength>,
    /// Largest `I(Y_j; Y_k | X^i, Z^i)` over `j < k <= i`; `None` when not needed.
    pub max_y_pair_cmi: Option<f64>,
    /// Smallest lag `l` at which `(X, Z)_{i-l}^{i-1}` d-separates `X_i` from
    /// the older `(X, Z)` past in the unrolled graph (checked for `l <= 2d`).
    pub separating_lag: Option<usize>,
    /// Set for the third branch: the verdict is about the graph, and exact
    /// conditional independence may still hold on a measure-zero set of
    /// (unfaithful) parameters.
    pub faithfulness_caveat: bool,
}

/// Classifies the model into one of the three [`Markovicity`] branches.
pub fn classify_markovicity(model: &JointMarkovModel) -> Result<MarkovicityReport> {
    let d = model.order();
    let test_horizon = 2 * d + 1;
    let y_to_x_edges: Vec<EdgeStrength> = edge_strengths(model)?
        .into_iter()
        .filter(|e| e.source == Process::Y && e.target == Process::X && e.cmi_bits > EDGE_THRESHOLD)
        .collect();

    let separating_lag = graph_separating_lag(model)?;

    let (class, max_y_pair_cmi) = if y_to_x_edges.is_empty() {
        (Markovicity::ConditionallyDMarkov, None)
    } else {
        let conditioning: NodeSet = (1..=test_horizon)
            .flat_map(|t| {
                let mut v = vec![Node::new(Process::X, t)];
                if model.has_z() {
                    v.push(Node::new(Process::Z, t));
                }
                v
            })
            .collect();
        let mut max = 0.0f64;
        for jt in 1..=test_horizon {
            for kt in jt + 1..=test_horizon {
                let a = NodeSet::from_iter([Node::new(Process::Y, jt)]);
                let b = NodeSet::from_iter([Node::new(Process::Y, kt)]);
                max = max.max(node_set_cmi(model, test_horizon, PathLaw::Stationary, &a, &b, &conditioning)?);
            }
        }
        let class = if max <= EDGE_THRESHOLD {
            Markovicity::MarkovOrderAtMost2d
        } else {
            Markovicity::NoFiniteOrder
        };
        (class, Some(max))
    };
    Ok(MarkovicityReport {
        class,
        order: d,
        test_horizon,
        y_to_x_edges,
        max_y_pair_cmi,
        separating_lag,
        faithfulness_caveat: class == Markovicity::NoFiniteOrder,
    })
}

fn graph_separating_lag(model: &JointMarkovModel) -> Result<Option<usize>> {
    let d = model.order();
    let horizon = 4 * d + 2;
    let dag = build_unrolled_network(model, horizon)?;
    let xz = |t: usize| {
        let mut v = vec![Node::new(Process::X, t)];
        if model.has_z() {
            v.push(Node::new(Process::Z, t));
        }
        v
    };
    let i = horizon;
    let a = NodeSet::from_iter([Node::new(Process::X, i)]);
    for l in 1..=2 * d {
        let c: NodeSet = (i - l..i).flat_map(xz).collect();
        let b: NodeSet = (1..i - l).flat_map(xz).collect();
        if d_separated(&dag, &a, &b, &c)? {
            return Ok(Some(l));
        }
    }
    Ok(None)
}
