#![allow(dead_code)]

use dircount::lattice::orthogonal_to_nabla;
use dircount::DirectedGraph;
use proptest::prelude::*;

/// Strongly connected graphs on up to `max_v` vertices: a Hamiltonian cycle plus random extra edges.
pub fn connected_graph(max_v: usize, max_extra: usize) -> impl Strategy<Value = DirectedGraph> {
    (1..=max_v).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n), 0..=max_extra).prop_map(move |extra| {
            let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            edges.extend(extra);
            DirectedGraph::from_edges(n, &edges).expect("valid graph")
        })
    })
}

/// Same, but never a single cycle, so `psi` has an interior.
pub fn branching_graph(max_v: usize, max_extra: usize) -> impl Strategy<Value = DirectedGraph> {
    connected_graph(max_v, max_extra).prop_filter("not cyclic", |g| !g.is_cyclic())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Primitive circulations with every coordinate positive and total at most `max_sum`.
pub fn positive_circulations(g: &DirectedGraph, max_sum: i64) -> Vec<Vec<i64>> {
    fn rec(i: usize, cur: &mut Vec<i64>, left: i64, g: &DirectedGraph, out: &mut Vec<Vec<i64>>) {
        if i == cur.len() {
            if orthogonal_to_nabla(g, cur) {
                out.push(cur.clone());
            }
            return;
        }
        for extra in 0..=left {
            cur[i] = 1 + extra;
            rec(i + 1, cur, left - extra, g, out);
        }
        cur[i] = 1;
    }
    let na = g.num_edges();
    let mut out = Vec::new();
    if max_sum >= na as i64 {
        rec(0, &mut vec![1; na], max_sum - na as i64, g, &mut out);
    }
    out.retain(|v| v.iter().fold(0, |a, &b| gcd(a, b)) == 1);
    out
}

pub fn binomial(n: u64, k: u64) -> num_bigint::BigUint {
    (0..k).fold(num_bigint::BigUint::from(1u32), |acc, i| acc * (n - i) / (i + 1))
}

/// `(x1 + x2) log(x1 + x2) - x1 log x1 - x2 log x2`, the growth indicator of the
/// two-vertex golden-mean graph on `(x1, x2, x2)`.
pub fn fibonacci_psi(x1: f64, x2: f64) -> f64 {
    let xlx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
    xlx(x1 + x2) - xlx(x1) - xlx(x2)
}

/// Label-space growth of the labelled golden-mean graph at `(y1, y2)` with `y1 >= y2`.
pub fn fibonacci_sofic_psi(y1: f64, y2: f64) -> f64 {
    fibonacci_psi(y1 - y2, y2)
}

/// Entropy of the full shift along `x`.
pub fn full_shift_psi(x: &[f64]) -> f64 {
    let s: f64 = x.iter().sum();
    x.iter().filter(|v| **v > 0.0).map(|v| -v * (v / s).ln()).sum()
}
