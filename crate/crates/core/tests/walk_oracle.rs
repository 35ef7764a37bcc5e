mod common;

use std::collections::BTreeSet;

use whrt_core::graph::build_graph;
use whrt_core::walks::{enumerate_walk_set, walk_cost_bounds, Walk};
use whrt_core::Constraint;

fn as_set(walks: &[Walk]) -> BTreeSet<(usize, Vec<usize>, u32)> {
    walks.iter().map(|w| (w.start, w.edges.clone(), w.cost)).collect()
}

#[test]
fn reference_walk_sets_match_brute_force() {
    let g = common::reference_row25_graph();
    let all: Vec<usize> = g.nodes().collect();
    for c_walk in [1, 2, 3, 5, 8, 20] {
        let ours = enumerate_walk_set(&g, c_walk, &all).unwrap();
        let brute = common::brute_walk_set(&g, c_walk);
        assert_eq!(ours.len(), brute.len(), "c_walk {c_walk}");
        assert_eq!(as_set(&ours), brute, "c_walk {c_walk}");
        assert!(ours.windows(2).all(|w| w[0] < w[1]), "not in lexicographic order");
        for w in &ours {
            assert!(w.cost >= c_walk && w.cost <= c_walk + 2, "{w}");
        }
        assert!(walk_cost_bounds(&g, c_walk, 2).is_ok());
    }
}

#[test]
fn built_graphs_match_brute_force() {
    for text in ["row:2/5", "any:3/5", "norowmiss:2/4", "any:5/7", "row:3/6"] {
        let c: Constraint = text.parse().unwrap();
        let g = build_graph(&c).unwrap();
        let all: Vec<usize> = g.nodes().collect();
        let w = whrt_core::constraints::max_consecutive_losses(&c);
        for c_walk in [1, 4, 9] {
            let ours = enumerate_walk_set(&g, c_walk, &all).unwrap();
            assert_eq!(as_set(&ours), common::brute_walk_set(&g, c_walk), "{c} {c_walk}");
            let (lo, hi) = walk_cost_bounds(&g, c_walk, w).unwrap();
            assert!(lo >= c_walk && hi <= c_walk + w);
        }
    }
}

#[test]
fn removing_last_edge_drops_below_budget() {
    let g = common::reference_row25_graph();
    for w in enumerate_walk_set(&g, 8, &[0, 1, 2]).unwrap() {
        let last = g.edges()[*w.edges.last().unwrap()].label;
        assert!(w.cost - last < 8);
        assert_eq!(Walk::new(&g, w.start, w.edges.clone()).unwrap().cost, w.cost);
    }
}

#[test]
fn start_subset_is_a_filter() {
    let g = common::reference_row25_graph();
    let all = enumerate_walk_set(&g, 8, &[0, 1, 2]).unwrap();
    let from_one = enumerate_walk_set(&g, 8, &[1]).unwrap();
    let filtered: Vec<_> = all.into_iter().filter(|w| w.start == 1).collect();
    assert_eq!(from_one, filtered);
}
