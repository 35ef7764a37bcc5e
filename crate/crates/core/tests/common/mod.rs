//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;

use whrt_core::graph::{Edge, WhrtGraph};
use whrt_core::{Constraint, ConstraintKind};

/// Window predicate written directly from the constraint definitions.
pub fn window_ok(c: &Constraint, w: &[bool]) -> bool {
    let n = c.n() as usize;
    match c.kind() {
        ConstraintKind::AnyNinM => w.iter().filter(|&&b| b).count() >= n,
        ConstraintKind::RowNinM => {
            let mut best = 0;
            let mut run = 0;
            for &b in w {
                run = if b { run + 1 } else { 0 };
                best = best.max(run);
            }
            best >= n
        }
        ConstraintKind::NoRowMiss => {
            let mut run = 0;
            for &b in w {
                run = if b { 0 } else { run + 1 };
                if run >= n {
                    return false;
                }
            }
            true
        }
    }
}

pub fn satisfies(c: &Constraint, s: &[bool]) -> bool {
    let m = c.m() as usize;
    s.len() < m || s.windows(m).all(|w| window_ok(c, w))
}

/// Every constraint with `1 <= n <= m <= max_m` that the library accepts.
pub fn all_constraints(max_m: u32) -> Vec<Constraint> {
    let mut out = Vec::new();
    for kind in ConstraintKind::ALL {
        for m in 1..=max_m {
            for n in 1..=m {
                if let Ok(c) = Constraint::new(kind, n, m) {
                    out.push(c);
                }
            }
        }
    }
    out
}

fn bits_of(code: u32, len: usize) -> Vec<bool> {
    (0..len).map(|k| code >> (len - 1 - k) & 1 == 1).collect()
}

/// Words of length `1..=horizon` that start and end with a success and can
/// be continued forever. Successes only help each of the three constraint
/// kinds, so a word continues forever iff appending `m` successes keeps it
/// admissible.
pub fn brute_words(c: &Constraint, horizon: usize) -> BTreeSet<Vec<bool>> {
    let m = c.m() as usize;
    let mut out = BTreeSet::new();
    for len in 1..=horizon {
        for code in 0..(1u32 << len) {
            let s = bits_of(code, len);
            if !s[0] || !s[len - 1] {
                continue;
            }
            let mut ext = s.clone();
            ext.extend(std::iter::repeat(true).take(m));
            if satisfies(c, &ext) {
                out.insert(s);
            }
        }
    }
    out
}

/// Words generated by walks from the initial node: `1`, then each edge with
/// label `l` appends `l - 1` losses and a success.
pub fn graph_words(g: &WhrtGraph, horizon: usize) -> BTreeSet<Vec<bool>> {
    let mut out = BTreeSet::new();
    let mut stack = vec![(g.initial(), vec![true])];
    while let Some((v, word)) = stack.pop() {
        out.insert(word.clone());
        for e in g.edges().iter().filter(|e| e.from == v) {
            if word.len() + e.label as usize > horizon {
                continue;
            }
            let mut next = word.clone();
            next.extend(std::iter::repeat(false).take(e.label as usize - 1));
            next.push(true);
            stack.push((e.to, next));
        }
    }
    out
}

/// Hand-written graph for `row:2/5`, edges in a fixed order
/// (`e1..e5` become indices `0..4`), nodes `v1..v3` become `0..2`.
pub fn reference_row25_graph() -> WhrtGraph {
    let e = |from, to, label| Edge { from, to, label };
    WhrtGraph::new(
        3,
        vec![e(2, 0, 1), e(0, 2, 3), e(0, 0, 1), e(1, 0, 1), e(0, 1, 2)],
        0,
    )
    .unwrap()
}

/// `(start, edge indices, cost)` for every walk whose cost reaches `c_walk`
/// exactly on its last edge, found by extending all shorter walks layer by
/// layer and scanning the full edge list.
pub fn brute_walk_set(g: &WhrtGraph, c_walk: u32) -> BTreeSet<(usize, Vec<usize>, u32)> {
    let mut done = BTreeSet::new();
    let mut layer: Vec<(usize, usize, Vec<usize>, u32)> =
        g.nodes().map(|v| (v, v, Vec::new(), 0)).collect();
    while !layer.is_empty() {
        let mut next = Vec::new();
        for (start, at, path, cost) in layer {
            for (idx, e) in g.edges().iter().enumerate() {
                if e.from != at {
                    continue;
                }
                let mut p = path.clone();
                p.push(idx);
                let c = cost + e.label;
                if c >= c_walk {
                    done.insert((start, p, c));
                } else {
                    next.push((start, e.to, p, c));
                }
            }
        }
        layer = next;
    }
    done
}

/// Whether two graphs are equal up to renaming nodes, with initial nodes
/// mapped onto each other.
pub fn isomorphic(a: &WhrtGraph, b: &WhrtGraph) -> bool {
    let n = a.node_count();
    if n != b.node_count() || a.edges().len() != b.edges().len() || n > 8 {
        return false;
    }
    let target: Vec<(usize, usize, u32)> = {
        let mut v: Vec<_> = b.edges().iter().map(|e| (e.from, e.to, e.label)).collect();
        v.sort_unstable();
        v
    };
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        if p[a.initial()] != b.initial() {
            return false;
        }
        let mut mapped: Vec<_> = a.edges().iter().map(|e| (p[e.from], p[e.to], e.label)).collect();
        mapped.sort_unstable();
        mapped == target
    })
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if k == p.len() {
        return f(p);
    }
    for i in k..p.len() {
        p.swap(k, i);
        if permutations(p, k + 1, f) {
            p.swap(k, i);
            return true;
        }
        p.swap(k, i);
    }
    false
}

/// Brute-force worst-case loss run over admissible words of length `2m`.
pub fn brute_max_losses(c: &Constraint) -> u32 {
    let len = 2 * c.m() as usize;
    let mut best = 0;
    for code in 0..(1u32 << len) {
        let s = bits_of(code, len);
        if !satisfies(c, &s) {
            continue;
        }
        let mut run = 0;
        for &b in &s {
            run = if b { 0 } else { run + 1 };
            best = best.max(run);
        }
    }
    best
}
