use super::{DirectedGraph, EdgeId, VertexId, Word};

/// `feasible[k][v]`: some path of length `k` leads from `v` to the target vertex.
#[derive(Debug, Clone)]
pub struct Reachability {
    feasible: Vec<Vec<bool>>,
}

impl Reachability {
    pub fn new(g: &DirectedGraph, target: VertexId, max_len: usize) -> Self {
        let nv = g.num_vertices();
        let mut feasible = Vec::with_capacity(max_len + 1);
        feasible.push((0..nv).map(|v| v == target).collect::<Vec<_>>());
        for k in 1..=max_len {
            let prev = &feasible[k - 1];
            let row = (0..nv).map(|v| g.out_edges(v).iter().any(|&a| prev[g.goal(a)])).collect();
            feasible.push(row);
        }
        Self { feasible }
    }

    #[inline]
    pub fn can_reach(&self, v: VertexId, remaining: usize) -> bool {
        self.feasible[remaining][v]
    }
}

/// Iterator over `W_n^{q,q'}`; depth-first, pruned by [`Reachability`].
pub struct Paths<'g> {
    graph: &'g DirectedGraph,
    len: usize,
    start: VertexId,
    table: Reachability,
    word: Vec<EdgeId>,
    cursor: Vec<usize>,
    started: bool,
    finished: bool,
}

impl<'g> Paths<'g> {
    pub(super) fn new(graph: &'g DirectedGraph, len: usize, start: VertexId, target: VertexId) -> Self {
        Self {
            graph,
            len,
            start,
            table: Reachability::new(graph, target, len),
            word: Vec::with_capacity(len),
            cursor: vec![0; len + 1],
            started: false,
            finished: false,
        }
    }

    fn vertex_at(&self, depth: usize) -> VertexId {
        if depth == 0 {
            self.start
        } else {
            self.graph.goal(self.word[depth - 1])
        }
    }
}

impl Iterator for Paths<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.finished {
            return None;
        }
        if !self.started {
            self.started = true;
            if !self.table.can_reach(self.start, self.len) {
                self.finished = true;
                return None;
            }
            if self.len == 0 {
                self.finished = true;
                return Some(Word::default());
            }
        }
        loop {
            let depth = self.word.len();
            if depth == self.len {
                let out = Word(self.word.clone());
                self.word.pop();
                return Some(out);
            }
            let v = self.vertex_at(depth);
            let outs = self.graph.out_edges(v);
            let mut advanced = false;
            while self.cursor[depth] < outs.len() {
                let a = outs[self.cursor[depth]];
                self.cursor[depth] += 1;
                if self.table.can_reach(self.graph.goal(a), self.len - depth - 1) {
                    self.word.push(a);
                    self.cursor[depth + 1] = 0;
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                if depth == 0 {
                    self.finished = true;
                    return None;
                }
                self.word.pop();
            }
        }
    }
}

/// Visits every word of `W_n^{q,q'}` together with its running occurrence
/// counts, without allocating per word. Same order as [`Paths`].
pub fn for_each_path<F>(g: &DirectedGraph, n: usize, q: VertexId, q_prime: VertexId, mut visit: F)
where
    F: FnMut(&[EdgeId], &[u32]),
{
    let table = Reachability::new(g, q_prime, n);
    if !table.can_reach(q, n) {
        return;
    }
    let mut word = Vec::with_capacity(n);
    let mut counts = vec![0u32; g.num_edges()];
    recurse(g, &table, n, q, &mut word, &mut counts, &mut visit);
}

fn recurse<F>(
    g: &DirectedGraph,
    table: &Reachability,
    remaining: usize,
    v: VertexId,
    word: &mut Vec<EdgeId>,
    counts: &mut [u32],
    visit: &mut F,
) where
    F: FnMut(&[EdgeId], &[u32]),
{
    if remaining == 0 {
        visit(word, counts);
        return;
    }
    for &a in g.out_edges(v) {
        let t = g.goal(a);
        if table.can_reach(t, remaining - 1) {
            word.push(a);
            counts[a] += 1;
            recurse(g, table, remaining - 1, t, word, counts, visit);
            counts[a] -= 1;
            word.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::fixtures;

    #[test]
    fn fibonacci_small_cases() {
        let g = fixtures::fibonacci();
        let w: Vec<_> = g.enumerate_paths(1, 0, 0).collect();
        assert_eq!(w, vec![super::Word(vec![0])]);
        assert_eq!(g.enumerate_paths(5, 0, 0).count(), 8);
        assert_eq!(g.enumerate_paths(0, 0, 1).count(), 0);
        assert_eq!(g.enumerate_paths(0, 1, 1).count(), 1);
    }

    #[test]
    fn fibonacci_recurrence() {
        let g = fixtures::fibonacci();
        let counts: Vec<usize> = (0..=10).map(|n| g.enumerate_paths(n, 0, 0).count()).collect();
        for n in 2..=10 {
            assert_eq!(counts[n], counts[n - 1] + counts[n - 2]);
        }
    }

    #[test]
    fn iterator_matches_visitor_order() {
        let g = fixtures::bipartite();
        for n in 0..7 {
            for q in 0..g.num_vertices() {
                for q2 in 0..g.num_vertices() {
                    let a: Vec<_> = g.enumerate_paths(n, q, q2).map(|w| w.0).collect();
                    let mut b = Vec::new();
                    super::for_each_path(&g, n, q, q2, |w, _| b.push(w.to_vec()));
                    assert_eq!(a, b);
                    let mut sorted = a.clone();
                    sorted.sort();
                    assert_eq!(a, sorted, "lexicographic order");
                }
            }
        }
    }
}
