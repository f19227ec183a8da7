//! Small reference graphs with known closed forms.

use crate::graph::{DirectedGraph, LabelledGraph};

/// Two vertices, a loop `a1` at `q1`, and the block `a2: q1->q2`, `a3: q2->q1`.
pub fn fibonacci() -> DirectedGraph {
    DirectedGraph::from_edges(2, &[(0, 0), (0, 1), (1, 0)]).expect("valid fixture")
}

/// Fibonacci graph with `a1, a3 -> b1` and `a2 -> b2`.
pub fn fibonacci_labelled() -> LabelledGraph {
    LabelledGraph::new(fibonacci(), vec!["b1".into(), "b2".into()], vec![0, 1, 0]).expect("valid fixture")
}

/// One vertex with `k` loops.
pub fn full_shift(k: usize) -> DirectedGraph {
    DirectedGraph::from_edges(1, &vec![(0, 0); k]).expect("valid fixture")
}

/// Directed cycle of length `p`.
pub fn cycle(p: usize) -> DirectedGraph {
    let edges: Vec<_> = (0..p).map(|i| (i, (i + 1) % p)).collect();
    DirectedGraph::from_edges(p, &edges).expect("valid fixture")
}

/// Black vertices `b1, b2`, white vertices `w1, w2`; every edge changes colour, so `p = 2`.
pub fn bipartite() -> DirectedGraph {
    let names = ["b1", "b2", "w1", "w2"].map(String::from).to_vec();
    let edges = [(0, 2), (0, 3), (1, 2), (2, 0), (2, 1), (3, 1)]
        .iter()
        .enumerate()
        .map(|(i, &(s, t))| (format!("a{}", i + 1), s, t))
        .collect();
    DirectedGraph::new(names, edges).expect("valid fixture")
}

/// Three vertices, aperiodic, with a two-dimensional fluctuation space.
pub fn three_state() -> DirectedGraph {
    DirectedGraph::from_edges(3, &[(0, 0), (0, 1), (1, 2), (2, 0), (1, 0)]).expect("valid fixture")
}

/// Every connected fixture, by name.
pub fn all() -> Vec<(&'static str, DirectedGraph)> {
    vec![
        ("fibonacci", fibonacci()),
        ("full-shift-2", full_shift(2)),
        ("full-shift-3", full_shift(3)),
        ("cycle-3", cycle(3)),
        ("bipartite", bipartite()),
        ("three-state", three_state()),
    ]
}
