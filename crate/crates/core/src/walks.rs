//! Walk sets `S(G, c)`: walks whose cost reaches `c` exactly on their last
//! edge.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::graph::{NodeId, WhrtGraph};

/// Default bound on materialized walk sets.
pub const DEFAULT_WALK_CAP: usize = 10_000_000;

/// A finite walk given by its start node and edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Walk {
    pub start: NodeId,
    pub edges: Vec<usize>,
    pub cost: u32,
}

impl Walk {
    /// Checks connectivity and computes the cost.
    pub fn new(g: &WhrtGraph, start: NodeId, edges: Vec<usize>) -> Result<Self> {
        if start >= g.node_count() {
            return Err(Error::InvalidWalk(format!("start node {start} does not exist")));
        }
        let mut at = start;
        let mut cost = 0;
        for &idx in &edges {
            let e = g
                .edge(idx)
                .ok_or_else(|| Error::InvalidWalk(format!("edge index {idx} does not exist")))?;
            if e.from != at {
                return Err(Error::InvalidWalk(format!(
                    "edge {idx} leaves node {} but the walk is at node {at}",
                    e.from
                )));
            }
            at = e.to;
            cost += e.label;
        }
        Ok(Self { start, edges, cost })
    }

    pub fn end(&self, g: &WhrtGraph) -> NodeId {
        self.edges.last().map_or(self.start, |&e| g.edges()[e].to)
    }

    pub fn labels<'a>(&'a self, g: &'a WhrtGraph) -> impl Iterator<Item = u32> + 'a {
        self.edges.iter().map(|&e| g.edges()[e].label)
    }

    /// Parses one line of the dump format `start: i1,i2,...,ik cost=C`.
    pub fn parse_line(g: &WhrtGraph, line: &str) -> Result<Self> {
        let err = |position: usize, expected: &str| Error::Parse {
            position,
            expected: expected.into(),
        };
        let colon = line.find(':').ok_or_else(|| err(0, "'start:'"))?;
        let start = line[..colon].trim().parse().map_err(|_| err(0, "start node id"))?;
        let rest = line[colon + 1..].trim();
        let (list, cost) = rest
            .rsplit_once("cost=")
            .ok_or_else(|| err(line.len(), "'cost=C'"))?;
        let edges = list
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| err(colon + 1, "comma-separated edge indices"))?;
        let cost: u32 = cost.trim().parse().map_err(|_| err(line.len(), "integer cost"))?;
        let walk = Self::new(g, start, edges)?;
        if walk.cost != cost {
            return invalid(format!("stated cost {cost} differs from label sum {}", walk.cost));
        }
        Ok(walk)
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.start)?;
        for (k, e) in self.edges.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, " cost={}", self.cost)
    }
}

fn check_args(g: &WhrtGraph, c_walk: u32, starts: &[NodeId]) -> Result<Vec<NodeId>> {
    if c_walk == 0 {
        return invalid("c_walk must be at least 1");
    }
    if starts.is_empty() {
        return invalid("walk enumeration needs at least one start node");
    }
    if let Some(&bad) = starts.iter().find(|&&s| s >= g.node_count()) {
        return invalid(format!("start node {bad} does not exist"));
    }
    let mut sorted = starts.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

/// Streams every walk of `S(g, c_walk)` starting in `starts` to `visit`, in
/// lexicographic order of (start node, edge indices). Returns the number of
/// walks visited.
pub fn visit_walk_set(
    g: &WhrtGraph,
    c_walk: u32,
    starts: &[NodeId],
    visit: &mut dyn FnMut(NodeId, &[usize], u32),
) -> Result<usize> {
    let starts = check_args(g, c_walk, starts)?;
    let mut count = 0;
    let mut path = Vec::new();
    for start in starts {
        descend(g, c_walk, start, start, 0, &mut path, &mut |s, p, c| {
            count += 1;
            visit(s, p, c)
        });
    }
    Ok(count)
}

fn descend(
    g: &WhrtGraph,
    c_walk: u32,
    start: NodeId,
    at: NodeId,
    cost: u32,
    path: &mut Vec<usize>,
    visit: &mut dyn FnMut(NodeId, &[usize], u32),
) {
    for &idx in g.outgoing(at) {
        let e = g.edges()[idx];
        path.push(idx);
        let total = cost + e.label;
        if total >= c_walk {
            visit(start, path, total);
        } else {
            descend(g, c_walk, start, e.to, total, path, visit);
        }
        path.pop();
    }
}

/// Materializes `S(g, c_walk)` restricted to walks starting in `starts`.
pub fn enumerate_walk_set(g: &WhrtGraph, c_walk: u32, starts: &[NodeId]) -> Result<Vec<Walk>> {
    enumerate_walk_set_capped(g, c_walk, starts, DEFAULT_WALK_CAP)
}

pub fn enumerate_walk_set_capped(
    g: &WhrtGraph,
    c_walk: u32,
    starts: &[NodeId],
    cap: usize,
) -> Result<Vec<Walk>> {
    let mut out = Vec::new();
    let mut overflow = false;
    visit_walk_set(g, c_walk, starts, &mut |start, edges, cost| {
        if out.len() < cap {
            out.push(Walk {
                start,
                edges: edges.to_vec(),
                cost,
            });
        } else {
            overflow = true;
        }
    })?;
    if overflow {
        return Err(Error::ResourceLimit(format!("walk set too large (more than {cap} walks)")));
    }
    Ok(out)
}

/// Smallest and largest cost in `S(g, c_walk)` over all start nodes, after
/// checking every cost lies in `[c_walk, c_walk + w_eta]`.
pub fn walk_cost_bounds(g: &WhrtGraph, c_walk: u32, w_eta: u32) -> Result<(u32, u32)> {
    let starts: Vec<NodeId> = g.nodes().collect();
    let mut lo = u32::MAX;
    let mut hi = 0;
    let mut outside = None;
    visit_walk_set(g, c_walk, &starts, &mut |start, edges, cost| {
        lo = lo.min(cost);
        hi = hi.max(cost);
        if (cost < c_walk || cost > c_walk + w_eta) && outside.is_none() {
            outside = Some(Walk {
                start,
                edges: edges.to_vec(),
                cost,
            });
        }
    })?;
    if let Some(w) = outside {
        return invalid(format!(
            "walk {w} has cost outside [{c_walk}, {}]",
            c_walk + w_eta
        ));
    }
    if hi == 0 {
        return invalid("walk set is empty");
    }
    Ok((lo, hi))
}
