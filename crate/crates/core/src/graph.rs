//! Simple undirected graphs over a fixed vertex set and ordered sequences of them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Unordered vertex pair stored canonically as `(min, max)`.
pub type Pair = (usize, usize);

/// Canonical form of an unordered pair.
#[inline]
pub fn pair(u: usize, v: usize) -> Pair {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// A simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StaticGraph {
    n: usize,
    edges: BTreeSet<Pair>,
}

impl StaticGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a graph from arbitrary pairs. Self-loops are dropped, duplicates collapse.
    ///
    /// Panics if an endpoint is `>= n`.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            g.insert(u, v);
        }
        g
    }

    /// Inserts `{u, v}`; returns `false` for self-loops and edges already present.
    pub fn insert(&mut self, u: usize, v: usize) -> bool {
        assert!(u < self.n && v < self.n, "endpoint out of range");
        if u == v {
            return false;
        }
        self.edges.insert(pair(u, v))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        u != v && self.edges.contains(&pair(u, v))
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<Pair> {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// In-place edge-set union.
    pub fn union_with(&mut self, other: &StaticGraph) {
        debug_assert_eq!(self.n, other.n);
        self.edges.extend(other.edges.iter().copied());
    }

    /// Union of a slice of graphs sharing a vertex count.
    pub fn union_of(n: usize, graphs: &[StaticGraph]) -> StaticGraph {
        let mut out = StaticGraph::empty(n);
        for g in graphs {
            out.union_with(g);
        }
        out
    }
}

/// Ordered graphs `G_1..G_T` on a fixed vertex set.
///
/// Steps are addressed 1-based in public APIs that talk about time (spans,
/// change points) and 0-based when indexing `graphs()` directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSequence {
    n: usize,
    graphs: Vec<StaticGraph>,
    resolution: u64,
}

impl GraphSequence {
    /// Panics if `graphs` is empty or vertex counts disagree.
    pub fn new(n: usize, graphs: Vec<StaticGraph>, resolution: u64) -> Self {
        assert!(
            !graphs.is_empty(),
            "a graph sequence needs at least one step"
        );
        assert!(
            graphs.iter().all(|g| g.n() == n),
            "all graphs must share the vertex set"
        );
        Self {
            n,
            graphs,
            resolution,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    pub fn graphs(&self) -> &[StaticGraph] {
        &self.graphs
    }

    /// Graph at 1-based step `t`.
    pub fn step(&self, t: usize) -> &StaticGraph {
        &self.graphs[t - 1]
    }

    /// Sub-sequence of 1-based inclusive steps `start..=end`.
    pub fn slice(&self, start: usize, end: usize) -> GraphSequence {
        assert!(start >= 1 && start <= end && end <= self.len());
        GraphSequence::new(
            self.n,
            self.graphs[start - 1..end].to_vec(),
            self.resolution,
        )
    }

    pub fn edge_counts(&self) -> Vec<usize> {
        self.graphs.iter().map(StaticGraph::edge_count).collect()
    }
}
