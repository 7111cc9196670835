//! Communication graph and conflict-free update-set formation.
//!
//! Node ids are zero-based throughout the library and in the JSON schema.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges collapse; self
    /// loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange { id: a.max(b), n });
            }
            if a == b {
                return Err(Error::Graph(format!("self loop at node {a}")));
            }
            sets[a].insert(b);
            sets[b].insert(a);
        }
        Ok(Self {
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path edges in range")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_edges(n, &edges).expect("complete edges in range")
    }

    /// Star with center 0.
    pub fn star(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Self::from_edges(n, &edges).expect("star edges in range")
    }

    /// Uniform random labelled spanning tree (Prufer decoding) plus `extra`
    /// distinct random edges, skipped once the graph is complete.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, extra: usize, rng: &mut R) -> Self {
        let mut edges = Vec::with_capacity(n + extra);
        if n == 2 {
            edges.push((0, 1));
        } else if n > 2 {
            let prufer: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
            let mut degree = vec![1usize; n];
            for &p in &prufer {
                degree[p] += 1;
            }
            for &p in &prufer {
                let leaf = (0..n).find(|&v| degree[v] == 1).expect("leaf exists");
                edges.push((leaf, p));
                degree[leaf] -= 1;
                degree[p] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
            edges.push((rest[0], rest[1]));
        }
        let mut g = Self::from_edges(n, &edges).expect("tree edges in range");
        let max_edges = n * n.saturating_sub(1) / 2;
        let mut added = 0;
        while added < extra && g.edge_count() < max_edges {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b && !g.has_edge(a, b) {
                g.insert_edge(a, b);
                added += 1;
            }
        }
        g
    }

    fn insert_edge(&mut self, a: usize, b: usize) {
        for (u, v) in [(a, b), (b, a)] {
            if let Err(pos) = self.adjacency[u].binary_search(&v) {
                self.adjacency[u].insert(pos, v);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// `N_i ∪ {i}` in ascending order.
    pub fn closed_neighborhood(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.n() {
            return Err(Error::NodeOutOfRange { id: i, n: self.n() });
        }
        let nb = &self.adjacency[i];
        let mut out = Vec::with_capacity(nb.len() + 1);
        let pos = nb.partition_point(|&v| v < i);
        out.extend_from_slice(&nb[..pos]);
        out.push(i);
        out.extend_from_slice(&nb[pos..]);
        Ok(out)
    }
}

/// Leaders of one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UpdateSet {
    leaders: Vec<usize>,
}

impl UpdateSet {
    pub fn new(mut leaders: Vec<usize>) -> Self {
        leaders.sort_unstable();
        leaders.dedup();
        Self { leaders }
    }

    /// Leaders in ascending id order.
    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn len(&self) -> usize {
        self.leaders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaders.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.leaders.binary_search(&i).is_ok()
    }
}

/// True iff the closed neighborhoods of all leader pairs are disjoint.
pub fn verify_nonconflict(g: &Graph, u: &UpdateSet) -> bool {
    let mut owner = vec![false; g.n()];
    for &i in u.leaders() {
        let Ok(nb) = g.closed_neighborhood(i) else {
            return false;
        };
        for j in nb {
            if owner[j] {
                return false;
            }
            owner[j] = true;
        }
    }
    true
}

/// Voting rule applied to given draws: each node votes for the argmin of
/// `votes` over its closed neighborhood (ties toward the smaller id) and
/// a node leads iff its whole closed neighborhood voted for it.
pub fn select_by_votes(g: &Graph, draws: &[f64]) -> UpdateSet {
    assert_eq!(draws.len(), g.n(), "one draw per node");
    let vote: Vec<usize> = (0..g.n())
        .map(|i| {
            let mut best = i;
            for &j in g.neighbors(i) {
                if draws[j] < draws[best] || (draws[j] == draws[best] && j < best) {
                    best = j;
                }
            }
            best
        })
        .collect();
    let leaders = (0..g.n())
        .filter(|&i| vote[i] == i && g.neighbors(i).iter().all(|&j| vote[j] == i))
        .collect();
    UpdateSet::new(leaders)
}

/// Draws `v_i ~ U[0,1)` in node order and applies [`select_by_votes`].
pub fn voting_select<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> UpdateSet {
    let draws: Vec<f64> = (0..g.n()).map(|_| rng.random::<f64>()).collect();
    select_by_votes(g, &draws)
}

/// Source of update sets for the engine.
pub trait UpdateSetSource {
    fn next_set(&mut self, g: &Graph) -> UpdateSet;
}

/// Voting-based selection driven by one seeded generator.
#[derive(Debug, Clone)]
pub struct VotingSelector<R> {
    rng: R,
}

impl<R: Rng> VotingSelector<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> UpdateSetSource for VotingSelector<R> {
    fn next_set(&mut self, g: &Graph) -> UpdateSet {
        voting_select(g, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_neighborhoods() {
        let p = Graph::path(3);
        assert_eq!(p.closed_neighborhood(1).unwrap(), vec![0, 1, 2]);
        assert_eq!(p.closed_neighborhood(0).unwrap(), vec![0, 1]);
        assert_eq!(
            Graph::star(5).closed_neighborhood(0).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
        assert!(matches!(
            p.closed_neighborhood(3),
            Err(Error::NodeOutOfRange { id: 3, n: 3 })
        ));
    }

    #[test]
    fn voting_examples() {
        // path 1-2-3 with v = (0.1, 0.5, 0.9)
        let u = select_by_votes(&Graph::path(3), &[0.1, 0.5, 0.9]);
        assert_eq!(u.leaders(), &[0]);
        // path 1-2-3-4-5 with v = (0.1, 0.5, 0.9, 0.6, 0.2)
        let u = select_by_votes(&Graph::path(5), &[0.1, 0.5, 0.9, 0.6, 0.2]);
        assert_eq!(u.leaders(), &[0, 4]);
        // single node always leads
        let u = select_by_votes(&Graph::from_edges(1, &[]).unwrap(), &[0.7]);
        assert_eq!(u.leaders(), &[0]);
    }

    #[test]
    fn ties_break_toward_smaller_id() {
        let u = select_by_votes(&Graph::path(3), &[0.5, 0.5, 0.5]);
        assert_eq!(u.leaders(), &[0]);
    }

    #[test]
    fn nonconflict_examples() {
        let p5 = Graph::path(5);
        assert!(verify_nonconflict(&p5, &UpdateSet::new(vec![0, 4])));
        assert!(!verify_nonconflict(
            &Graph::path(3),
            &UpdateSet::new(vec![0, 2])
        ));
        assert!(verify_nonconflict(&p5, &UpdateSet::default()));
    }

    #[test]
    fn graph_construction_errors() {
        assert!(Graph::from_edges(2, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 2)]).is_err());
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(!g.is_connected());
        assert!(Graph::path(4).is_connected());
    }

    #[test]
    fn random_connected_graphs_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..40 {
            let g = Graph::random_connected(n, n.div_ceil(4), &mut rng);
            assert!(g.is_connected(), "n = {n}");
            if n > 1 {
                assert!(g.edge_count() >= n - 1);
            }
        }
    }

    #[test]
    fn seeded_selection_is_deterministic() {
        let g = Graph::random_connected(12, 3, &mut ChaCha8Rng::seed_from_u64(1));
        let mut a = VotingSelector::new(ChaCha8Rng::seed_from_u64(9));
        let mut b = VotingSelector::new(ChaCha8Rng::seed_from_u64(9));
        for _ in 0..200 {
            assert_eq!(a.next_set(&g), b.next_set(&g));
        }
    }
}
