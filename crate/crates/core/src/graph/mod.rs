//! Directed graphs, deterministic labellings and the exact path oracle.
//!
//! Vertices and edges are dense integer ids in document order; the edge order
//! fixes the coordinate order of every edge-indexed vector in the crate.

mod enumerate;
mod json;

use std::collections::VecDeque;

use num_integer::Integer;

use crate::error::{Error, Result};

pub use enumerate::{for_each_path, Paths, Reachability};
pub use json::{parse_graph, GraphDocument};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type LabelId = usize;

/// A finite directed graph `(Q, A, source, goal)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    source: Vec<VertexId>,
    goal: Vec<VertexId>,
    out_edges: Vec<Vec<EdgeId>>,
}

impl DirectedGraph {
    /// Builds a graph from named vertices and `(name, source, goal)` edges.
    pub fn new(vertex_names: Vec<String>, edges: Vec<(String, VertexId, VertexId)>) -> Result<Self> {
        if vertex_names.is_empty() {
            return Err(Error::EmptyVertexSet);
        }
        if edges.is_empty() {
            return Err(Error::EmptyEdgeSet);
        }
        check_unique("vertex", &vertex_names)?;
        let nv = vertex_names.len();
        let mut edge_names = Vec::with_capacity(edges.len());
        let mut source = Vec::with_capacity(edges.len());
        let mut goal = Vec::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); nv];
        for (id, (name, s, t)) in edges.into_iter().enumerate() {
            for v in [s, t] {
                if v >= nv {
                    return Err(Error::DanglingEndpoint { edge: name, vertex: v.to_string() });
                }
            }
            out_edges[s].push(id);
            edge_names.push(name);
            source.push(s);
            goal.push(t);
        }
        check_unique("edge", &edge_names)?;
        Ok(Self { vertex_names, edge_names, source, goal, out_edges })
    }

    /// Graph with generated names `q1..` and `a1..`.
    pub fn from_edges(num_vertices: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let vertices = (1..=num_vertices).map(|i| format!("q{i}")).collect();
        let edges = edges
            .iter()
            .enumerate()
            .map(|(i, &(s, t))| (format!("a{}", i + 1), s, t))
            .collect();
        Self::new(vertices, edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_names.len()
    }

    pub fn source(&self, a: EdgeId) -> VertexId {
        self.source[a]
    }

    pub fn goal(&self, a: EdgeId) -> VertexId {
        self.goal[a]
    }

    /// Outgoing edges of `q`, in increasing edge id.
    pub fn out_edges(&self, q: VertexId) -> &[EdgeId] {
        &self.out_edges[q]
    }

    pub fn vertex_name(&self, q: VertexId) -> &str {
        &self.vertex_names[q]
    }

    pub fn edge_name(&self, a: EdgeId) -> &str {
        &self.edge_names[a]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn edge_names(&self) -> &[String] {
        &self.edge_names
    }

    pub fn vertex_index(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name)
    }

    /// Adjacency-count matrix `M[q][q'] = |{a : source(a)=q, goal(a)=q'}|`.
    pub fn adjacency_counts(&self) -> Vec<Vec<u64>> {
        let n = self.num_vertices();
        let mut m = vec![vec![0u64; n]; n];
        for a in 0..self.num_edges() {
            m[self.source[a]][self.goal[a]] += 1;
        }
        m
    }

    fn reachable_from(&self, start: VertexId, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; self.num_vertices()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            for a in 0..self.num_edges() {
                let (from, to) = if reverse { (self.goal[a], self.source[a]) } else { (self.source[a], self.goal[a]) };
                if from == v && !seen[to] {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        seen
    }

    /// Strong connectivity: every ordered pair `(q, q')` is joined by a path.
    pub fn is_connected(&self) -> bool {
        self.check_connected().is_ok()
    }

    /// Like [`is_connected`](Self::is_connected) but names an unreachable pair.
    pub fn check_connected(&self) -> Result<()> {
        let forward = self.reachable_from(0, false);
        if let Some(q) = forward.iter().position(|&r| !r) {
            return Err(Error::NotConnected { from: self.vertex_names[0].clone(), to: self.vertex_names[q].clone() });
        }
        let backward = self.reachable_from(0, true);
        if let Some(q) = backward.iter().position(|&r| !r) {
            return Err(Error::NotConnected { from: self.vertex_names[q].clone(), to: self.vertex_names[0].clone() });
        }
        Ok(())
    }

    /// Period `p` and phase classes, by integer potential propagation.
    ///
    /// A BFS tree from vertex 0 assigns potentials; every edge `a` then has a
    /// discrepancy `pot(source) + 1 - pot(goal)` and `p` is the gcd of these.
    pub fn compute_period(&self) -> Result<PeriodData> {
        self.check_connected()?;
        let nv = self.num_vertices();
        let mut potential: Vec<Option<i64>> = vec![None; nv];
        potential[0] = Some(0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            let pv = potential[v].expect("queued vertices have potentials");
            for &a in &self.out_edges[v] {
                let t = self.goal[a];
                if potential[t].is_none() {
                    potential[t] = Some(pv + 1);
                    queue.push_back(t);
                }
            }
        }
        let potential: Vec<i64> = potential.into_iter().map(|p| p.expect("connected")).collect();
        let period = (0..self.num_edges())
            .map(|a| (potential[self.source[a]] + 1 - potential[self.goal[a]]).abs())
            .fold(0i64, |acc, d| acc.gcd(&d));
        debug_assert!(period > 0);
        let phase = potential.iter().map(|&x| x.rem_euclid(period) as usize).collect();
        Ok(PeriodData { period: period as usize, phase })
    }

    /// Every vertex has out-degree exactly one.
    pub fn is_cyclic(&self) -> bool {
        self.out_edges.iter().all(|o| o.len() == 1)
    }

    /// Occurrence vector of an admissible word.
    pub fn occurrence(&self, w: &Word) -> Result<OccurrenceVector> {
        self.check_admissible(w)?;
        let mut counts = vec![0i64; self.num_edges()];
        for &a in &w.0 {
            counts[a] += 1;
        }
        Ok(OccurrenceVector(counts))
    }

    pub fn check_admissible(&self, w: &Word) -> Result<()> {
        for (i, &a) in w.0.iter().enumerate() {
            if a >= self.num_edges() {
                return Err(Error::InadmissibleWord { position: i });
            }
            if i > 0 && self.goal[w.0[i - 1]] != self.source[a] {
                return Err(Error::InadmissibleWord { position: i });
            }
        }
        Ok(())
    }

    /// Lazily enumerates `W_n^{q,q'}` in lexicographic edge-id order.
    pub fn enumerate_paths(&self, n: usize, q: VertexId, q_prime: VertexId) -> Paths<'_> {
        Paths::new(self, n, q, q_prime)
    }
}

fn check_unique(kind: &'static str, names: &[String]) -> Result<()> {
    let mut sorted: Vec<&String> = names.iter().collect();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateId { kind, id: w[0].clone() });
        }
    }
    Ok(())
}

/// A graph together with a deterministic (right-resolving) labelling `A -> B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelledGraph {
    base: DirectedGraph,
    label_names: Vec<String>,
    labelling: Vec<LabelId>,
}

impl LabelledGraph {
    pub fn new(base: DirectedGraph, label_names: Vec<String>, labelling: Vec<LabelId>) -> Result<Self> {
        if labelling.len() != base.num_edges() {
            return Err(Error::DimensionMismatch { expected: base.num_edges(), got: labelling.len() });
        }
        check_unique("label", &label_names)?;
        let mut used = vec![false; label_names.len()];
        for (a, &b) in labelling.iter().enumerate() {
            if b >= label_names.len() {
                return Err(Error::Malformed(format!("edge `{}` has unknown label index {b}", base.edge_name(a))));
            }
            used[b] = true;
        }
        if let Some(b) = used.iter().position(|u| !u) {
            return Err(Error::Malformed(format!("label `{}` is not carried by any edge", label_names[b])));
        }
        for q in 0..base.num_vertices() {
            let out = base.out_edges(q);
            for (i, &a) in out.iter().enumerate() {
                if out[..i].iter().any(|&a2| labelling[a2] == labelling[a]) {
                    return Err(Error::NondeterministicLabelling {
                        vertex: base.vertex_name(q).to_string(),
                        label: label_names[labelling[a]].clone(),
                    });
                }
            }
        }
        Ok(Self { base, label_names, labelling })
    }

    /// The identity labelling, each edge its own letter.
    pub fn identity(base: DirectedGraph) -> Self {
        let labels = base.edge_names().to_vec();
        let labelling = (0..base.num_edges()).collect();
        Self { base, label_names: labels, labelling }
    }

    pub fn base(&self) -> &DirectedGraph {
        &self.base
    }

    pub fn num_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn label(&self, a: EdgeId) -> LabelId {
        self.labelling[a]
    }

    pub fn labelling(&self) -> &[LabelId] {
        &self.labelling
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// `(pi(a_1), ..., pi(a_n))`.
    pub fn project_word(&self, w: &Word) -> Result<Vec<LabelId>> {
        self.base.check_admissible(w)?;
        Ok(w.0.iter().map(|&a| self.labelling[a]).collect())
    }

    /// Pushes an edge-indexed integer vector forward to label space.
    pub fn project_counts(&self, x: &[i64]) -> Vec<i64> {
        let mut y = vec![0i64; self.num_labels()];
        for (a, &v) in x.iter().enumerate() {
            y[self.labelling[a]] += v;
        }
        y
    }
}

/// Result of parsing a graph document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Graph {
    Plain(DirectedGraph),
    Labelled(LabelledGraph),
}

impl Graph {
    pub fn base(&self) -> &DirectedGraph {
        match self {
            Graph::Plain(g) => g,
            Graph::Labelled(lg) => lg.base(),
        }
    }

    pub fn labelled(&self) -> Option<&LabelledGraph> {
        match self {
            Graph::Plain(_) => None,
            Graph::Labelled(lg) => Some(lg),
        }
    }
}

/// A sequence of edge ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<EdgeId>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Integer vector on the edge set (an element of the lattice `Z^A`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccurrenceVector(pub Vec<i64>);

impl OccurrenceVector {
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }
}

/// Period of a connected graph and the phase class of every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodData {
    pub period: usize,
    /// `phase[q]` in `0..period`; vertex 0 has phase 0.
    pub phase: Vec<usize>,
}

impl PeriodData {
    /// Whether `q'` lies in the class `Q_n^q`, i.e. `phase(q') - phase(q) = n mod p`.
    pub fn in_class(&self, q: VertexId, q_prime: VertexId, n: usize) -> bool {
        (self.phase[q] + n) % self.period == self.phase[q_prime]
    }

    /// Indicator vector of `Q_n^q`.
    pub fn class_indicator(&self, q: VertexId, n: usize) -> Vec<bool> {
        (0..self.phase.len()).map(|q2| self.in_class(q, q2, n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn connectivity() {
        assert!(fixtures::fibonacci().is_connected());
        assert!(fixtures::full_shift(1).is_connected());
        let g = DirectedGraph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(!g.is_connected());
        match g.check_connected() {
            Err(Error::NotConnected { from, to }) => assert_eq!((from.as_str(), to.as_str()), ("q2", "q1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn periods() {
        assert_eq!(fixtures::fibonacci().compute_period().unwrap().period, 1);
        assert_eq!(fixtures::cycle(3).compute_period().unwrap().period, 3);
        let bip = fixtures::bipartite();
        let pd = bip.compute_period().unwrap();
        assert_eq!(pd.period, 2);
        for a in 0..bip.num_edges() {
            assert_eq!(pd.phase[bip.goal(a)], (pd.phase[bip.source(a)] + 1) % 2);
        }
        let disconnected = DirectedGraph::from_edges(2, &[(0, 0), (1, 1)]).unwrap();
        assert!(disconnected.compute_period().is_err());
    }

    #[test]
    fn cyclicity() {
        assert!(fixtures::cycle(4).is_cyclic());
        assert!(!fixtures::fibonacci().is_cyclic());
        assert!(!fixtures::full_shift(2).is_cyclic());
    }

    #[test]
    fn occurrence_counts() {
        let g = fixtures::fibonacci();
        assert_eq!(g.occurrence(&Word(vec![0, 1, 2])).unwrap().0, vec![1, 1, 1]);
        assert_eq!(g.occurrence(&Word(vec![])).unwrap().0, vec![0, 0, 0]);
        assert_eq!(g.occurrence(&Word(vec![1, 2, 1, 2])).unwrap().0, vec![0, 2, 2]);
        assert!(matches!(g.occurrence(&Word(vec![1, 1])), Err(Error::InadmissibleWord { position: 1 })));
    }

    #[test]
    fn projection() {
        let lg = fixtures::fibonacci_labelled();
        assert_eq!(lg.project_word(&Word(vec![0, 1, 2])).unwrap(), vec![0, 1, 0]);
        assert_eq!(lg.project_word(&Word(vec![])).unwrap(), Vec::<usize>::new());
        assert_eq!(lg.project_word(&Word(vec![1, 2])).unwrap(), vec![1, 0]);
    }

    #[test]
    fn nondeterministic_labelling_rejected() {
        let g = fixtures::full_shift(2);
        let err = LabelledGraph::new(g, vec!["b".into()], vec![0, 0]).unwrap_err();
        assert!(matches!(err, Error::NondeterministicLabelling { .. }));
    }

    #[test]
    fn dangling_endpoint_rejected() {
        assert!(matches!(
            DirectedGraph::from_edges(2, &[(0, 5)]),
            Err(Error::DanglingEndpoint { .. })
        ));
        assert!(matches!(DirectedGraph::from_edges(1, &[]), Err(Error::EmptyEdgeSet)));
    }
}
