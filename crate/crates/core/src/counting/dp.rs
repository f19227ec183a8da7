//! Exact path counts by occurrence vector.
//!
//! Edges are mapped to coordinates (the identity for occurrence vectors, the
//! labelling for label counts). The targeted count runs a layered dynamic
//! program over `(vertex, partial count vector)` with the partial vector packed
//! into a mixed-radix `u64`; the distribution variant keeps every count vector.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{for_each_path, DirectedGraph, Reachability, VertexId};

/// Environment variable capping the memory of the dynamic programs, in MiB.
pub const BUDGET_ENV: &str = "DIRCOUNT_BUDGET_MB";

/// Rough heap cost of one stored state.
const STATE_BYTES: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_length: usize,
    pub max_bytes: usize,
    /// Split the work over the first edge with rayon.
    pub parallel: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_length: 40, max_bytes: 1024 << 20, parallel: true }
    }
}

impl Budget {
    /// Default budget with the memory cap taken from [`BUDGET_ENV`] when set.
    pub fn from_env() -> Result<Self> {
        let mut b = Self::default();
        if let Ok(v) = std::env::var(BUDGET_ENV) {
            let mb: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::OutOfDomain(format!("{BUDGET_ENV} must be a whole number of MiB, got {v:?}")))?;
            b.max_bytes = mb << 20;
        }
        Ok(b)
    }

    fn check_length(&self, n: usize) -> Result<()> {
        if n > self.max_length {
            return Err(Error::BudgetExceeded(format!("length {n} exceeds the limit {}", self.max_length)));
        }
        Ok(())
    }

    fn check_states(&self, states: usize) -> Result<()> {
        if states.saturating_mul(STATE_BYTES) > self.max_bytes {
            return Err(Error::BudgetExceeded(format!(
                "{states} dynamic-programming states exceed the memory cap of {} MiB",
                self.max_bytes >> 20
            )));
        }
        Ok(())
    }
}

/// Identity edge-to-coordinate map.
pub fn edge_coords(g: &DirectedGraph) -> Vec<usize> {
    (0..g.num_edges()).collect()
}

/// Number of words in `W_n^{q,q'}` whose coordinate counts equal `target`.
pub fn count_targeted(
    g: &DirectedGraph,
    coords: &[usize],
    target: &[i64],
    n: usize,
    q: VertexId,
    q_prime: VertexId,
    budget: &Budget,
) -> Result<BigUint> {
    budget.check_length(n)?;
    if target.iter().any(|&t| t < 0) || target.iter().sum::<i64>() != n as i64 {
        return Ok(BigUint::zero());
    }
    let mut strides = Vec::with_capacity(target.len());
    let mut acc: u64 = 1;
    for &t in target {
        strides.push(acc);
        acc = acc
            .checked_mul(t as u64 + 1)
            .ok_or_else(|| Error::BudgetExceeded("count vector does not fit the state encoding".into()))?;
    }
    let reach = Reachability::new(g, q_prime, n);
    if !reach.can_reach(q, n) {
        return Ok(BigUint::zero());
    }
    let packed = Packing { coords, target, strides: &strides, q_prime };
    if budget.parallel && n > 0 {
        let firsts: Vec<usize> = g
            .out_edges(q)
            .iter()
            .copied()
            .filter(|&a| target[coords[a]] > 0 && reach.can_reach(g.goal(a), n - 1))
            .collect();
        let parts: Vec<Result<BigUint>> = firsts
            .par_iter()
            .map(|&a| layered(g, &packed, &reach, n, g.goal(a), 1, strides[coords[a]], budget))
            .collect();
        let mut total = BigUint::zero();
        for p in parts {
            total += p?;
        }
        Ok(total)
    } else {
        layered(g, &packed, &reach, n, q, 0, 0, budget)
    }
}

struct Packing<'a> {
    coords: &'a [usize],
    target: &'a [i64],
    strides: &'a [u64],
    q_prime: VertexId,
}

impl Packing<'_> {
    #[inline]
    fn digit(&self, key: u64, c: usize) -> i64 {
        ((key / self.strides[c]) % (self.target[c] as u64 + 1)) as i64
    }

    fn full_key(&self) -> u64 {
        self.target.iter().zip(self.strides).map(|(&t, &s)| t as u64 * s).sum()
    }
}

#[allow(clippy::too_many_arguments)]
fn layered(
    g: &DirectedGraph,
    packed: &Packing<'_>,
    reach: &Reachability,
    n: usize,
    start: VertexId,
    start_step: usize,
    start_key: u64,
    budget: &Budget,
) -> Result<BigUint> {
    let nv = g.num_vertices();
    let mut layer: Vec<HashMap<u64, BigUint>> = vec![HashMap::new(); nv];
    layer[start].insert(start_key, BigUint::one());
    for step in start_step..n {
        let remaining = n - step - 1;
        let mut next: Vec<HashMap<u64, BigUint>> = vec![HashMap::new(); nv];
        for (v, states) in layer.iter().enumerate() {
            for (&key, count) in states {
                for &a in g.out_edges(v) {
                    let c = packed.coords[a];
                    let t = g.goal(a);
                    if packed.digit(key, c) < packed.target[c] && reach.can_reach(t, remaining) {
                        *next[t].entry(key + packed.strides[c]).or_default() += count;
                    }
                }
            }
        }
        budget.check_states(next.iter().map(HashMap::len).sum())?;
        layer = next;
    }
    Ok(layer[packed.q_prime].remove(&packed.full_key()).unwrap_or_default())
}

/// Full distribution of coordinate-count vectors over `W_n^{q,q'}`.
pub fn count_distribution(
    g: &DirectedGraph,
    coords: &[usize],
    num_coords: usize,
    n: usize,
    q: VertexId,
    q_prime: VertexId,
    budget: &Budget,
) -> Result<BTreeMap<Vec<i64>, BigUint>> {
    budget.check_length(n)?;
    let reach = Reachability::new(g, q_prime, n);
    let nv = g.num_vertices();
    let mut out = BTreeMap::new();
    if !reach.can_reach(q, n) {
        return Ok(out);
    }
    let mut layer: Vec<HashMap<Vec<u16>, BigUint>> = vec![HashMap::new(); nv];
    layer[q].insert(vec![0; num_coords], BigUint::one());
    for step in 0..n {
        let remaining = n - step - 1;
        let mut next: Vec<HashMap<Vec<u16>, BigUint>> = vec![HashMap::new(); nv];
        for (v, states) in layer.iter().enumerate() {
            for (key, count) in states {
                for &a in g.out_edges(v) {
                    let t = g.goal(a);
                    if reach.can_reach(t, remaining) {
                        let mut k = key.clone();
                        k[coords[a]] += 1;
                        *next[t].entry(k).or_default() += count;
                    }
                }
            }
        }
        budget.check_states(next.iter().map(HashMap::len).sum())?;
        layer = next;
    }
    for (k, v) in layer.swap_remove(q_prime) {
        out.insert(k.into_iter().map(i64::from).collect(), v);
    }
    Ok(out)
}

/// Distribution by listing every word; the reference the dynamic programs are checked against.
pub fn enumerate_distribution(
    g: &DirectedGraph,
    coords: &[usize],
    num_coords: usize,
    n: usize,
    q: VertexId,
    q_prime: VertexId,
) -> BTreeMap<Vec<i64>, BigUint> {
    let mut out: BTreeMap<Vec<i64>, BigUint> = BTreeMap::new();
    for_each_path(g, n, q, q_prime, |_, counts| {
        let mut k = vec![0i64; num_coords];
        for (a, &c) in counts.iter().enumerate() {
            k[coords[a]] += c as i64;
        }
        *out.entry(k).or_default() += 1u32;
    });
    out
}

/// `|W_n^{q,q'}|` for every `q'`, by repeated multiplication with the adjacency matrix.
pub fn walk_counts(g: &DirectedGraph, n: usize, q: VertexId) -> Vec<BigUint> {
    let nv = g.num_vertices();
    let mut v = vec![BigUint::zero(); nv];
    v[q] = BigUint::one();
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); nv];
        for (s, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &a in g.out_edges(s) {
                next[g.goal(a)] += c;
            }
        }
        v = next;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn binomial(n: u64, k: u64) -> BigUint {
        (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn fibonacci_binomials() {
        let g = fixtures::fibonacci();
        let coords = edge_coords(&g);
        let budget = Budget::default();
        for x1 in 0..8i64 {
            for x2 in 0..6i64 {
                let n = (x1 + 2 * x2) as usize;
                let c = count_targeted(&g, &coords, &[x1, x2, x2], n, 0, 0, &budget).unwrap();
                assert_eq!(c, binomial((x1 + x2) as u64, x2 as u64), "x1={x1} x2={x2}");
            }
        }
        let c = count_targeted(&g, &coords, &[2, 1, 1], 4, 0, 0, &budget).unwrap();
        assert_eq!(c, BigUint::from(3u32));
    }

    #[test]
    fn serial_matches_parallel() {
        let g = fixtures::three_state();
        let coords = edge_coords(&g);
        let serial = Budget { parallel: false, ..Budget::default() };
        let dist = count_distribution(&g, &coords, 5, 9, 0, 2, &serial).unwrap();
        for (k, v) in &dist {
            let a = count_targeted(&g, &coords, k, 9, 0, 2, &serial).unwrap();
            let b = count_targeted(&g, &coords, k, 9, 0, 2, &Budget::default()).unwrap();
            assert_eq!(&a, v);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_cases() {
        let g = fixtures::bipartite();
        let coords = edge_coords(&g);
        let b = Budget::default();
        assert!(count_distribution(&g, &coords, 6, 3, 0, 0, &b).unwrap().is_empty());
        assert_eq!(count_targeted(&g, &coords, &[-1, 1, 1, 1, 1, 0], 3, 0, 0, &b).unwrap(), BigUint::zero());
        assert_eq!(count_targeted(&g, &coords, &[1, 0, 0, 0, 0, 0], 2, 0, 0, &b).unwrap(), BigUint::zero());
    }

    #[test]
    fn budget_limits() {
        let g = fixtures::full_shift(3);
        let coords = edge_coords(&g);
        let tight = Budget { max_length: 10, ..Budget::default() };
        assert!(matches!(count_targeted(&g, &coords, &[4, 4, 3], 11, 0, 0, &tight), Err(Error::BudgetExceeded(_))));
        let tiny = Budget { max_bytes: 200, ..Budget::default() };
        assert!(matches!(count_targeted(&g, &coords, &[4, 4, 4], 12, 0, 0, &tiny), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn walk_counts_fibonacci() {
        let g = fixtures::fibonacci();
        let w = walk_counts(&g, 10, 0);
        assert_eq!(w[0].clone() + &w[1], BigUint::from(144u32));
    }
}
