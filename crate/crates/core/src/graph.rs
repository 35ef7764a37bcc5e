//! WHRT graphs: labeled directed graphs whose walks generate the admissible
//! reception patterns of a constraint.
//!
//! An edge labeled `l` stands for one reception followed by `l - 1` dropouts,
//! i.e. `l` sampling periods until the next reception. Concatenating the
//! edges of a walk therefore yields a binary pattern starting with `1`.
//!
//! [`build_graph`] constructs the graph from the window semantics directly:
//!
//! 1. States are pairs (history, last gap). The history holds the most recent
//!    `m - 1` outcomes (fewer at the start of time) and ends with a reception.
//!    The initial state is the single reception at `t = 0`.
//! 2. A gap `l` leads from a state to its successor iff appending
//!    `0^(l-1) 1` keeps every newly completed window admissible.
//! 3. States from which no infinite continuation exists are pruned.
//! 4. States are merged by Moore partition refinement, starting from the
//!    partition by last gap. Every node of the result is therefore entered
//!    by edges of a single label.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::constraints::{max_consecutive_losses, BinarySeq, Constraint};
use crate::error::{invalid, Error, Result};

pub type NodeId = usize;

/// Number of unminimized states explored before [`build_graph`] gives up.
pub const MAX_CONSTRUCTION_STATES: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhrtGraph {
    node_count: usize,
    edges: Vec<Edge>,
    initial: NodeId,
    constraint: Option<Constraint>,
    outgoing: Vec<Vec<usize>>,
}

impl WhrtGraph {
    /// Builds a graph from an explicit edge list. Edge indices follow the
    /// order of `edges`.
    pub fn new(node_count: usize, edges: Vec<Edge>, initial: NodeId) -> Result<Self> {
        if node_count == 0 {
            return invalid("graph needs at least one node");
        }
        if initial >= node_count {
            return invalid(format!("initial node {initial} out of range"));
        }
        let mut outgoing = vec![Vec::new(); node_count];
        for (idx, e) in edges.iter().enumerate() {
            if e.from >= node_count || e.to >= node_count {
                return invalid(format!("edge {idx} references a missing node"));
            }
            if e.label == 0 {
                return invalid(format!("edge {idx} has label 0"));
            }
            outgoing[e.from].push(idx);
        }
        Ok(Self {
            node_count,
            edges,
            initial,
            constraint: None,
            outgoing,
        })
    }

    pub fn with_constraint(mut self, c: Constraint) -> Self {
        self.constraint = Some(c);
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> Option<&Edge> {
        self.edges.get(idx)
    }

    pub fn initial(&self) -> NodeId {
        self.initial
    }

    /// The constraint this graph was built for, if known.
    pub fn constraint(&self) -> Option<&Constraint> {
        self.constraint.as_ref()
    }

    /// Indices of the edges leaving `node`, ascending.
    pub fn outgoing(&self, node: NodeId) -> &[usize] {
        &self.outgoing[node]
    }

    pub fn max_label(&self) -> u32 {
        self.edges.iter().map(|e| e.label).max().unwrap_or(0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.node_count
    }

    /// Nodes reachable from the initial node.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(v) = queue.pop_front() {
            for &e in &self.outgoing[v] {
                let to = self.edges[e].to;
                if !seen[to] {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        seen
    }

    /// Structural problems: nodes without successors and unreachable nodes.
    pub fn structural_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        for v in self.nodes() {
            if self.outgoing[v].is_empty() {
                issues.push(format!("node {v} has no outgoing edge"));
            }
        }
        for (v, r) in self.reachable().into_iter().enumerate() {
            if !r {
                issues.push(format!("node {v} is unreachable from the initial node"));
            }
        }
        issues
    }

    /// Textual adjacency export, one `from to label` line per edge.
    pub fn to_adjacency(&self) -> String {
        let mut out = String::from("# whrt graph\n");
        if let Some(c) = &self.constraint {
            let _ = writeln!(out, "constraint {c}");
        }
        let _ = writeln!(out, "nodes {}", self.node_count);
        let _ = writeln!(out, "initial {}", self.initial);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.from, e.to, e.label);
        }
        out
    }

    /// Parses the format written by [`WhrtGraph::to_adjacency`].
    pub fn from_adjacency(text: &str) -> Result<Self> {
        let mut node_count = None;
        let mut initial = None;
        let mut constraint = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line_err = |what: &str| Error::Parse {
                position: lineno + 1,
                expected: format!("{what} (line {})", lineno + 1),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "nodes" if fields.len() == 2 => {
                    node_count = Some(fields[1].parse().map_err(|_| line_err("node count"))?)
                }
                "initial" if fields.len() == 2 => {
                    initial = Some(fields[1].parse().map_err(|_| line_err("initial node id"))?)
                }
                "constraint" if fields.len() == 2 => constraint = Some(fields[1].parse()?),
                _ if fields.len() == 3 => {
                    let num = |s: &str| s.parse::<usize>().map_err(|_| line_err("'from to label'"));
                    edges.push(Edge {
                        from: num(fields[0])?,
                        to: num(fields[1])?,
                        label: num(fields[2])? as u32,
                    });
                }
                _ => return Err(line_err("'nodes N', 'initial V', 'constraint C' or 'from to label'")),
            }
        }
        let initial = initial.ok_or_else(|| Error::Parse {
            position: 0,
            expected: "an 'initial' header line".into(),
        })?;
        let node_count = node_count.unwrap_or_else(|| {
            edges.iter().map(|e| e.from.max(e.to) + 1).max().unwrap_or(0).max(initial + 1)
        });
        let g = Self::new(node_count, edges, initial)?;
        Ok(match constraint {
            Some(c) => g.with_constraint(c),
            None => g,
        })
    }

    /// Graphviz export.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph whrt {\n  rankdir=LR;\n");
        for v in self.nodes() {
            let shape = if v == self.initial { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  v{v} [shape={shape}];");
        }
        for (idx, e) in self.edges.iter().enumerate() {
            let _ = writeln!(out, "  v{} -> v{} [label=\"e{idx} (l={})\"];", e.from, e.to, e.label);
        }
        out.push_str("}\n");
        out
    }
}

/// Concatenates the edges of a walk: each edge contributes a `1` followed by
/// `label - 1` zeros. The reception that closes the last edge is not emitted.
pub fn generate_sequence(g: &WhrtGraph, walk: &[usize]) -> Result<BinarySeq> {
    if walk.is_empty() {
        return Err(Error::InvalidWalk("empty walk".into()));
    }
    let mut bits = Vec::new();
    let mut prev: Option<&Edge> = None;
    for (pos, &idx) in walk.iter().enumerate() {
        let e = g
            .edge(idx)
            .ok_or_else(|| Error::InvalidWalk(format!("edge index {idx} does not exist")))?;
        if let Some(p) = prev {
            if p.to != e.from {
                return Err(Error::InvalidWalk(format!(
                    "edge {idx} at position {pos} starts at node {} but the walk is at node {}",
                    e.from, p.to
                )));
            }
        }
        bits.push(true);
        bits.extend(std::iter::repeat(false).take(e.label as usize - 1));
        prev = Some(e);
    }
    Ok(BinarySeq(bits))
}

/// [`generate_sequence`] followed by the reception that closes the last
/// edge, i.e. the full finite transmission pattern a walk stands for.
pub fn generate_closed_sequence(g: &WhrtGraph, walk: &[usize]) -> Result<BinarySeq> {
    let mut seq = generate_sequence(g, walk)?;
    seq.0.push(true);
    Ok(seq)
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct HistoryState {
    history: Vec<bool>,
    last_gap: u32,
}

/// Constructs a WHRT graph for `c`.
pub fn build_graph(c: &Constraint) -> Result<WhrtGraph> {
    let m = c.m() as usize;
    let max_gap = c.m();

    // Unminimized state space.
    let mut states = vec![HistoryState {
        history: vec![true],
        last_gap: 1,
    }];
    let mut index: HashMap<HistoryState, usize> = HashMap::from([(states[0].clone(), 0)]);
    let mut trans: Vec<Vec<(u32, usize)>> = Vec::new();
    let mut next = 0;
    while next < states.len() {
        let mut out = Vec::new();
        for gap in 1..=max_gap {
            let Some(history) = extend_history(c, &states[next].history, gap) else {
                continue;
            };
            let succ = HistoryState { history, last_gap: gap };
            let id = match index.get(&succ) {
                Some(&id) => id,
                None => {
                    if states.len() >= MAX_CONSTRUCTION_STATES {
                        return Err(Error::ResourceLimit(format!(
                            "graph construction for {c} exceeds {MAX_CONSTRUCTION_STATES} states"
                        )));
                    }
                    states.push(succ.clone());
                    index.insert(succ, states.len() - 1);
                    states.len() - 1
                }
            };
            out.push((gap, id));
        }
        trans.push(out);
        next += 1;
    }
    debug_assert!(states.iter().all(|s| s.history.len() < m.max(2)));

    let alive = viable_states(&trans);
    debug_assert!(alive[0]);

    // Moore refinement starting from the partition by last gap.
    let live: Vec<usize> = (0..states.len()).filter(|&s| alive[s]).collect();
    let mut block = vec![usize::MAX; states.len()];
    for &s in &live {
        block[s] = states[s].last_gap as usize;
    }
    let mut block_count = 0;
    loop {
        let mut sigs: HashMap<(usize, Vec<(u32, usize)>), usize> = HashMap::new();
        let mut refined = vec![usize::MAX; states.len()];
        for &s in &live {
            let succ: Vec<(u32, usize)> = trans[s]
                .iter()
                .filter(|(_, t)| alive[*t])
                .map(|&(gap, t)| (gap, block[t]))
                .collect();
            let n = sigs.len();
            refined[s] = *sigs.entry((block[s], succ)).or_insert(n);
        }
        let count = sigs.len();
        block = refined;
        if count == block_count {
            break;
        }
        block_count = count;
    }

    // Quotient graph, nodes numbered breadth-first from the initial block.
    let mut quotient: Vec<BTreeSet<(u32, usize)>> = vec![BTreeSet::new(); block_count];
    for &s in &live {
        for &(gap, t) in &trans[s] {
            if alive[t] {
                quotient[block[s]].insert((gap, block[t]));
            }
        }
    }
    let mut order = vec![usize::MAX; block_count];
    let mut queue = VecDeque::from([block[0]]);
    order[block[0]] = 0;
    let mut numbered = 1;
    let mut edges = Vec::new();
    while let Some(b) = queue.pop_front() {
        for &(gap, t) in &quotient[b] {
            if order[t] == usize::MAX {
                order[t] = numbered;
                numbered += 1;
                queue.push_back(t);
            }
            edges.push(Edge {
                from: order[b],
                to: order[t],
                label: gap,
            });
        }
    }
    edges.sort();
    let g = WhrtGraph::new(numbered, edges, 0)?.with_constraint(*c);
    debug_assert!(g.max_label() <= max_consecutive_losses(c) + 1);
    Ok(g)
}

/// Appends `0^(gap-1) 1` to `history`; returns the truncated history if every
/// newly completed window is admissible.
fn extend_history(c: &Constraint, history: &[bool], gap: u32) -> Option<Vec<bool>> {
    let m = c.m() as usize;
    let mut seq = history.to_vec();
    for k in 0..gap {
        seq.push(k + 1 == gap);
        if !c.last_window_ok(&seq) {
            return None;
        }
    }
    let keep = seq.len().min(m.saturating_sub(1).max(1));
    Some(seq[seq.len() - keep..].to_vec())
}

/// Greatest set of states that each have a transition into the set.
fn viable_states(trans: &[Vec<(u32, usize)>]) -> Vec<bool> {
    let n = trans.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut live_out = vec![0usize; n];
    for (s, out) in trans.iter().enumerate() {
        live_out[s] = out.len();
        for &(_, t) in out {
            preds[t].push(s);
        }
    }
    let mut alive = vec![true; n];
    let mut dead: Vec<usize> = (0..n).filter(|&s| live_out[s] == 0).collect();
    for &s in &dead {
        alive[s] = false;
    }
    while let Some(s) = dead.pop() {
        for &p in &preds[s] {
            if alive[p] {
                live_out[p] -= 1;
                if live_out[p] == 0 {
                    alive[p] = false;
                    dead.push(p);
                }
            }
        }
    }
    alive
}

/// Outcome of [`validate_graph`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub horizon: usize,
    /// Missing successors, unreachable nodes, labels above `w + 1`.
    pub structural: Vec<String>,
    /// Walk-generated patterns violating the constraint, shortest first.
    pub soundness_counterexamples: Vec<BinarySeq>,
    /// Admissible patterns no walk from the initial node generates, shortest first.
    pub completeness_counterexamples: Vec<BinarySeq>,
    /// False when the horizon was too short for the completeness check.
    pub completeness_checked: bool,
    pub generated_patterns: usize,
    pub admissible_patterns: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.structural.is_empty()
            && self.soundness_counterexamples.is_empty()
            && self.completeness_counterexamples.is_empty()
    }
}

const MAX_REPORTED: usize = 10;

/// Compares the patterns a graph generates with the admissible patterns of
/// `c`, exhaustively up to `horizon` entries.
///
/// Patterns are compared as finite words that start and end with a
/// reception: a walk contributes its generated sequence followed by the
/// closing `1`. Soundness covers walks from every node. Completeness compares
/// the walks from the initial node with every satisfying word that can still
/// be continued forever; it needs `horizon >= 2m` and is skipped (reported as
/// unchecked) below that.
pub fn validate_graph(g: &WhrtGraph, c: &Constraint, horizon: usize) -> ValidationReport {
    let mut structural = g.structural_issues();
    let bound = max_consecutive_losses(c) + 1;
    for (idx, e) in g.edges().iter().enumerate() {
        if e.label > bound {
            structural.push(format!("edge {idx} has label {} above w+1 = {bound}", e.label));
        }
    }

    let mut soundness = BTreeSet::new();
    let mut generated = HashSet::new();
    for start in g.nodes() {
        let record = start == g.initial();
        let mut seq = vec![true];
        walk_patterns(g, c, start, horizon, &mut seq, &mut |s, ok| {
            if !ok {
                soundness.insert((s.len(), BinarySeq(s.to_vec())));
            } else if record {
                generated.insert(s.to_vec());
            }
        });
    }

    let completeness_checked = horizon >= 2 * c.m() as usize;
    let mut completeness = BTreeSet::new();
    let mut admissible_count = 0;
    if completeness_checked {
        let mut seq = vec![true];
        admissible_words(c, horizon, &mut seq, &mut |s| {
            admissible_count += 1;
            if !generated.contains(s) {
                completeness.insert((s.len(), BinarySeq(s.to_vec())));
            }
        });
    }

    ValidationReport {
        horizon,
        structural,
        soundness_counterexamples: soundness.into_iter().take(MAX_REPORTED).map(|(_, s)| s).collect(),
        completeness_counterexamples: completeness.into_iter().take(MAX_REPORTED).map(|(_, s)| s).collect(),
        completeness_checked,
        generated_patterns: generated.len(),
        admissible_patterns: admissible_count,
    }
}

/// Visits every pattern (ending in the closing reception) generated by walks
/// from `node`, with a flag telling whether it satisfies `c`. Violating
/// patterns are not extended further.
fn walk_patterns(
    g: &WhrtGraph,
    c: &Constraint,
    node: NodeId,
    horizon: usize,
    seq: &mut Vec<bool>,
    visit: &mut dyn FnMut(&[bool], bool),
) {
    if seq.len() == 1 {
        visit(seq, true);
    }
    for &idx in g.outgoing(node) {
        let e = g.edges()[idx];
        if seq.len() + e.label as usize > horizon {
            continue;
        }
        let base = seq.len();
        let mut ok = true;
        for k in 0..e.label {
            seq.push(k + 1 == e.label);
            ok &= c.last_window_ok(seq);
        }
        visit(seq, ok);
        if ok {
            walk_patterns(g, c, e.to, horizon, seq, visit);
        }
        seq.truncate(base);
    }
}

/// Visits every word of length `<= horizon` that starts and ends with `1`,
/// satisfies `c`, and admits a satisfying continuation of `m` further
/// entries (which for window constraints is equivalent to an infinite one).
fn admissible_words(c: &Constraint, horizon: usize, seq: &mut Vec<bool>, visit: &mut dyn FnMut(&[bool])) {
    if *seq.last().unwrap() && continuable(c, seq) {
        visit(seq);
    }
    if seq.len() == horizon {
        return;
    }
    for bit in [true, false] {
        seq.push(bit);
        if c.last_window_ok(seq) {
            admissible_words(c, horizon, seq, visit);
        }
        seq.pop();
    }
}

fn continuable(c: &Constraint, seq: &[bool]) -> bool {
    let mut work = seq.to_vec();
    let target = seq.len() + c.m() as usize;
    !crate::constraints::for_each_satisfying(c, target, &mut work, &mut |_| false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label_multiset(g: &WhrtGraph) -> Vec<u32> {
        let mut l: Vec<u32> = g.edges().iter().map(|e| e.label).collect();
        l.sort();
        l
    }

    #[test]
    fn row_2_5_has_three_nodes_five_edges() {
        let g = build_graph(&Constraint::row(2, 5).unwrap()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges().len(), 5);
        assert_eq!(label_multiset(&g), vec![1, 1, 1, 2, 3]);
    }

    #[test]
    fn trivial_constraint_is_single_loop() {
        let g = build_graph(&Constraint::any(1, 1).unwrap()).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edges(), &[Edge { from: 0, to: 0, label: 1 }]);
        assert!(validate_graph(&g, &Constraint::any(1, 1).unwrap(), 6).passed());
    }

    #[test]
    fn sequence_generation() {
        let g = WhrtGraph::new(
            2,
            vec![
                Edge { from: 0, to: 1, label: 3 },
                Edge { from: 1, to: 0, label: 1 },
                Edge { from: 0, to: 0, label: 1 },
            ],
            0,
        )
        .unwrap();
        assert_eq!(generate_sequence(&g, &[2]).unwrap(), BinarySeq::from_bits(&[1]));
        assert_eq!(generate_sequence(&g, &[0, 1]).unwrap(), BinarySeq::from_bits(&[1, 0, 0, 1]));
        assert!(matches!(generate_sequence(&g, &[1, 1]), Err(Error::InvalidWalk(_))));
        assert!(matches!(generate_sequence(&g, &[7]), Err(Error::InvalidWalk(_))));
    }

    #[test]
    fn wrong_graph_fails_completeness() {
        let c = Constraint::row(2, 5).unwrap();
        let g = WhrtGraph::new(1, vec![Edge { from: 0, to: 0, label: 5 }], 0).unwrap();
        let report = validate_graph(&g, &c, 10);
        assert!(!report.passed());
        assert!(report
            .completeness_counterexamples
            .contains(&BinarySeq::from_bits(&[1, 1])));
    }

    #[test]
    fn short_horizon_skips_completeness() {
        let c = Constraint::row(2, 5).unwrap();
        let g = build_graph(&c).unwrap();
        let report = validate_graph(&g, &c, 7);
        assert!(!report.completeness_checked);
        assert!(report.passed());
    }

    #[test]
    fn adjacency_round_trip() {
        let g = build_graph(&Constraint::any(3, 5).unwrap()).unwrap();
        let back = WhrtGraph::from_adjacency(&g.to_adjacency()).unwrap();
        assert_eq!(g, back);
        assert!(g.to_dot().starts_with("digraph"));
    }

    #[test]
    fn adjacency_parse_errors_name_the_line() {
        let err = WhrtGraph::from_adjacency("initial 0\n0 0 x\n").unwrap_err();
        assert_eq!(err, Error::Parse { position: 2, expected: "'from to label' (line 2)".into() });
        assert!(WhrtGraph::from_adjacency("0 0 1\n").is_err());
    }
}
