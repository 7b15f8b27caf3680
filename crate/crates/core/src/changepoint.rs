//! MDL change-point detection over windowed graphs and the distance-tolerant
//! precision/recall area used to score detected change points.
//!
//! A segment of consecutive graphs is encoded under one node partition. Its
//! cost in bits is
//!
//! ```text
//! log*(t) + log*(k) + n·H(group proportions) + Σ_g log*(|g|)
//!   + Σ_{g <= h} [ log2(cap_gh + 1) + cap_gh · H(ρ_gh) ]
//! ```
//!
//! with `t` graphs in the segment, `k` groups, `cap_gh` the number of vertex
//! pairs in block `(g, h)` times `t` (`C(|g|, 2)` pairs on the diagonal), and
//! `ρ_gh` the fraction of those slots holding an edge. A new window opens a
//! new segment when encoding it alone is cheaper than extending.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{Pair, StaticGraph};
use crate::windowing::WindowedSequence;

/// Normalizing constant of the universal integer code.
const LOG_STAR_NORMALIZER: f64 = 2.865064;

/// Universal code length of a positive integer, in bits.
pub fn log_star(x: usize) -> f64 {
    assert!(x >= 1);
    let mut bits = LOG_STAR_NORMALIZER.log2();
    let mut term = (x as f64).log2();
    while term > 0.0 {
        bits += term;
        term = term.log2();
    }
    bits
}

/// Binary entropy in bits, `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

/// Node grouping; `groups[v]` is the group of vertex `v`, ids dense from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    groups: Vec<usize>,
}

impl Partition {
    pub fn single(n: usize) -> Self {
        Self { groups: vec![0; n] }
    }

    /// Relabels arbitrary group ids densely in order of first appearance.
    pub fn from_assignment(assignment: &[usize]) -> Self {
        let mut map = BTreeMap::new();
        let groups = assignment
            .iter()
            .map(|g| {
                let next = map.len();
                *map.entry(*g).or_insert(next)
            })
            .collect();
        Self { groups }
    }

    pub fn group_count(&self) -> usize {
        self.groups.iter().max().map_or(0, |m| m + 1)
    }

    pub fn group_of(&self, v: usize) -> usize {
        self.groups[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.groups
    }

    pub fn n(&self) -> usize {
        self.groups.len()
    }
}

/// Edge multiplicities of a run of graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAggregate {
    n: usize,
    len: usize,
    weights: BTreeMap<Pair, u32>,
}

impl SegmentAggregate {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            len: 0,
            weights: BTreeMap::new(),
        }
    }

    pub fn from_graphs(n: usize, graphs: &[StaticGraph]) -> Self {
        let mut s = Self::empty(n);
        for g in graphs {
            s.push(g);
        }
        s
    }

    pub fn push(&mut self, g: &StaticGraph) {
        debug_assert_eq!(g.n(), self.n);
        for e in g.edges() {
            *self.weights.entry(e).or_default() += 1;
        }
        self.len += 1;
    }

    /// Number of graphs in the segment.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn weighted_adjacency(&self) -> Vec<Vec<(usize, u32)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(u, v), &w) in &self.weights {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }
}

#[derive(Debug, Clone)]
struct BlockStats {
    sizes: Vec<usize>,
    /// Symmetric; the diagonal counts each intra-group edge once.
    edges: Vec<Vec<u64>>,
}

impl BlockStats {
    fn new(seg: &SegmentAggregate, part: &Partition) -> Self {
        let k = part.group_count();
        let mut sizes = vec![0; k];
        for &g in part.assignment() {
            sizes[g] += 1;
        }
        let mut edges = vec![vec![0u64; k]; k];
        for (&(u, v), &w) in &seg.weights {
            let (a, b) = (part.group_of(u), part.group_of(v));
            edges[a][b] += w as u64;
            if a != b {
                edges[b][a] += w as u64;
            }
        }
        Self { sizes, edges }
    }

    fn cost(&self, n: usize, len: usize) -> f64 {
        let live: Vec<usize> = (0..self.sizes.len())
            .filter(|&g| self.sizes[g] > 0)
            .collect();
        let mut bits = log_star(len.max(1)) + log_star(live.len().max(1));
        for &g in &live {
            let p = self.sizes[g] as f64 / n as f64;
            bits += -(n as f64) * p * p.log2() + log_star(self.sizes[g]);
        }
        for (i, &g) in live.iter().enumerate() {
            for &h in &live[i..] {
                let pairs = if g == h {
                    self.sizes[g] * (self.sizes[g] - 1) / 2
                } else {
                    self.sizes[g] * self.sizes[h]
                };
                let cap = (pairs * len) as f64;
                if cap == 0.0 {
                    continue;
                }
                let rho = self.edges[g][h] as f64 / cap;
                bits += (cap + 1.0).log2() + cap * binary_entropy(rho);
            }
        }
        bits
    }

    /// Moves a vertex with per-group neighbour weights `to_group` from `from` to `to`.
    fn apply_move(&mut self, from: usize, to: usize, to_group: &[u64]) {
        if to == self.sizes.len() {
            self.sizes.push(0);
            for row in &mut self.edges {
                row.push(0);
            }
            self.edges.push(vec![0; to + 1]);
        }
        for (h, &w) in to_group.iter().enumerate() {
            if w == 0 {
                continue;
            }
            self.edges[from][h] -= w;
            if h != from {
                self.edges[h][from] -= w;
            }
        }
        self.sizes[from] -= 1;
        for (h, &w) in to_group.iter().enumerate() {
            if w == 0 {
                continue;
            }
            self.edges[to][h] += w;
            if h != to {
                self.edges[h][to] += w;
            }
        }
        self.sizes[to] += 1;
    }
}

/// Encoding cost in bits of `graphs` under `partition`.
pub fn segment_cost(graphs: &[StaticGraph], partition: &Partition) -> f64 {
    let seg = SegmentAggregate::from_graphs(partition.n(), graphs);
    aggregate_cost(&seg, partition)
}

pub fn aggregate_cost(seg: &SegmentAggregate, partition: &Partition) -> f64 {
    assert_eq!(seg.n, partition.n(), "partition must cover every vertex");
    BlockStats::new(seg, partition).cost(seg.n, seg.len)
}

const IMPROVEMENT_EPS: f64 = 1e-9;

/// Partition search: single-vertex moves (to an existing group or a fresh
/// singleton) swept in ascending vertex order until no move lowers the cost,
/// alternated with group splits until neither helps.
///
/// A split seeds a new group with the member most connected inside its group,
/// then grows it by repeatedly pulling in the member most connected to it; the
/// cheapest prefix of that growth order is kept if it beats the current cost.
pub fn local_search(seg: &SegmentAggregate, start: &Partition) -> Partition {
    let adj = seg.weighted_adjacency();
    let mut groups = shuffle(seg, &adj, start.assignment().to_vec());
    while let Some(split) = best_split(seg, &adj, &groups) {
        groups = shuffle(seg, &adj, split);
    }
    Partition::from_assignment(&groups)
}

fn neighbour_weights(adj: &[(usize, u32)], groups: &[usize], k: usize) -> Vec<u64> {
    let mut to_group = vec![0u64; k];
    for &(u, w) in adj {
        to_group[groups[u]] += w as u64;
    }
    to_group
}

fn shuffle(seg: &SegmentAggregate, adj: &[Vec<(usize, u32)>], start: Vec<usize>) -> Vec<usize> {
    let n = seg.n;
    let mut groups = Partition::from_assignment(&start).groups;
    let mut stats = BlockStats::new(
        seg,
        &Partition {
            groups: groups.clone(),
        },
    );
    let mut current = stats.cost(n, seg.len);

    loop {
        let mut improved = false;
        for v in 0..n {
            let from = groups[v];
            let k = stats.sizes.len();
            let to_group = neighbour_weights(&adj[v], &groups, k);
            let mut best: Option<(f64, usize)> = None;
            // A fresh group only helps when `v` is not already alone.
            let fresh = if stats.sizes[from] > 1 { k + 1 } else { k };
            for to in 0..fresh {
                if to == from || (to < k && stats.sizes[to] == 0) {
                    continue;
                }
                let mut trial = stats.clone();
                trial.apply_move(from, to, &to_group);
                let c = trial.cost(n, seg.len);
                if best.is_none_or(|(b, _)| c < b) {
                    best = Some((c, to));
                }
            }
            if let Some((c, to)) = best {
                if c < current - IMPROVEMENT_EPS {
                    stats.apply_move(from, to, &to_group);
                    groups[v] = to;
                    current = c;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Partition::from_assignment(&groups).groups
}

/// First group (by id) whose seeded split lowers the cost, as a new assignment.
fn best_split(
    seg: &SegmentAggregate,
    adj: &[Vec<(usize, u32)>],
    groups: &[usize],
) -> Option<Vec<usize>> {
    let n = seg.n;
    let part = Partition::from_assignment(groups);
    let base = BlockStats::new(seg, &part);
    let current = base.cost(n, seg.len);
    let k = base.sizes.len();

    for g in 0..k {
        let members: Vec<usize> = (0..n).filter(|&v| part.groups[v] == g).collect();
        if members.len() < 2 {
            continue;
        }
        let mut trial_groups = part.groups.clone();
        let mut stats = base.clone();
        let internal = |v: usize, target: usize, gs: &[usize]| -> u64 {
            adj[v]
                .iter()
                .filter(|&&(u, _)| gs[u] == target)
                .map(|&(_, w)| w as u64)
                .sum()
        };
        let mut order = Vec::with_capacity(members.len() - 1);
        let mut best: Option<(f64, usize)> = None;
        for step in 0..members.len() - 1 {
            let target = if step == 0 { g } else { k };
            let pick = members
                .iter()
                .copied()
                .filter(|&v| trial_groups[v] == g)
                .max_by(|&a, &b| {
                    internal(a, target, &trial_groups)
                        .cmp(&internal(b, target, &trial_groups))
                        .then(b.cmp(&a))
                })
                .unwrap();
            let to_group = neighbour_weights(&adj[pick], &trial_groups, stats.sizes.len());
            stats.apply_move(g, k, &to_group);
            trial_groups[pick] = k;
            order.push(pick);
            let c = stats.cost(n, seg.len);
            if best.is_none_or(|(b, _)| c < b) {
                best = Some((c, step + 1));
            }
        }
        if let Some((c, len)) = best {
            if c < current - IMPROVEMENT_EPS {
                let mut out = part.groups.clone();
                for &v in &order[..len] {
                    out[v] = k;
                }
                return Some(out);
            }
        }
    }
    None
}

/// Detected change times at the initial resolution (1-based, ascending).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangePointResult {
    pub times: Vec<usize>,
}

impl ChangePointResult {
    /// One index per line.
    pub fn to_text(&self) -> String {
        self.times.iter().map(|t| format!("{t}\n")).collect()
    }
}

/// Per-window decision trace of [`graphscope_detect_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionStep {
    pub window: usize,
    pub extend_cost: f64,
    pub split_cost: f64,
    pub split: bool,
}

/// Online segmentation of the windowed graphs; each new segment start after
/// the first is a change point, reported as its window's first initial step.
pub fn graphscope_detect(ws: &WindowedSequence<'_>) -> ChangePointResult {
    graphscope_detect_traced(ws).0
}

pub fn graphscope_detect_traced(
    ws: &WindowedSequence<'_>,
) -> (ChangePointResult, Vec<DetectionStep>) {
    let n = ws.n();
    let windows = ws.graphs();
    let mut trace = Vec::new();
    let mut result = ChangePointResult::default();
    if windows.is_empty() {
        return (result, trace);
    }

    let mut seg = SegmentAggregate::from_graphs(n, &windows[..1]);
    let mut part = local_search(&seg, &Partition::single(n));
    let mut seg_cost = aggregate_cost(&seg, &part);

    for (p, g) in windows.iter().enumerate().skip(1) {
        let mut extended = seg.clone();
        extended.push(g);
        let ext_part = local_search(&extended, &part);
        let extend_cost = aggregate_cost(&extended, &ext_part);

        let fresh = SegmentAggregate::from_graphs(n, std::slice::from_ref(g));
        let fresh_part = local_search(&fresh, &part);
        let fresh_cost = aggregate_cost(&fresh, &fresh_part);
        let split_cost = seg_cost + fresh_cost;

        let split = extend_cost > split_cost;
        trace.push(DetectionStep {
            window: p + 1,
            extend_cost,
            split_cost,
            split,
        });
        if split {
            result.times.push(ws.spans()[p].start);
            seg = fresh;
            part = fresh_part;
            seg_cost = fresh_cost;
        } else {
            seg = extended;
            part = ext_part;
            seg_cost = extend_cost;
        }
    }
    (result, trace)
}

/// Area under the distance-tolerant precision/recall curve, normalized by `n`.
///
/// Zero when either set is empty.
pub fn cp_pr_auc(proposed: &[usize], truth: &[usize], n: usize) -> f64 {
    if proposed.is_empty() || truth.is_empty() || n == 0 {
        return 0.0;
    }
    let dist = |a: usize, b: usize| a.abs_diff(b);
    let nearest_truth: Vec<usize> = proposed
        .iter()
        .map(|&s| truth.iter().map(|&t| dist(s, t)).min().unwrap())
        .collect();
    let nearest_proposed: Vec<usize> = truth
        .iter()
        .map(|&t| proposed.iter().map(|&s| dist(s, t)).min().unwrap())
        .collect();

    let mut ds: Vec<usize> = proposed
        .iter()
        .flat_map(|&s| truth.iter().map(move |&t| dist(s, t)))
        .chain([0, n])
        .filter(|&d| d <= n)
        .collect();
    ds.sort_unstable();
    ds.dedup();

    let precision =
        |d: usize| nearest_truth.iter().filter(|&&x| x <= d).count() as f64 / proposed.len() as f64;
    let recall =
        |d: usize| nearest_proposed.iter().filter(|&&x| x <= d).count() as f64 / truth.len() as f64;
    let area: f64 = ds
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 * precision(w[0]) * recall(w[0]))
        .sum();
    area / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSequence;
    use crate::windowing::apply_uniform;
    use approx::assert_relative_eq;

    fn clique(n: usize, members: std::ops::Range<usize>) -> StaticGraph {
        let mut g = StaticGraph::empty(n);
        for u in members.clone() {
            for v in u + 1..members.end {
                g.insert(u, v);
            }
        }
        g
    }

    #[test]
    fn log_star_values() {
        assert_relative_eq!(log_star(1), 2.865064f64.log2(), epsilon = 1e-9);
        // log2(16)=4, log2(4)=2, log2(2)=1, log2(1)=0 stops.
        assert_relative_eq!(
            log_star(16),
            LOG_STAR_NORMALIZER.log2() + 4.0 + 2.0 + 1.0,
            epsilon = 1e-12
        );
        assert!(log_star(1000) > log_star(999));
    }

    #[test]
    fn empty_segment_costs_only_header() {
        let graphs = vec![StaticGraph::empty(5); 3];
        let part = Partition::single(5);
        let header = log_star(3) + log_star(1) + log_star(5) + ((10 * 3) as f64 + 1.0).log2();
        assert_relative_eq!(segment_cost(&graphs, &part), header, epsilon = 1e-12);
    }

    #[test]
    fn complete_graph_has_no_entropy_term() {
        let g = clique(4, 0..4);
        let part = Partition::single(4);
        let expected = log_star(1) + log_star(1) + log_star(4) + 7f64.log2();
        assert_relative_eq!(segment_cost(&[g], &part), expected, epsilon = 1e-12);
    }

    #[test]
    fn two_cliques_prefer_two_groups() {
        let mut g = clique(8, 0..4);
        g.union_with(&clique(8, 4..8));
        let one = segment_cost(std::slice::from_ref(&g), &Partition::single(8));
        let two = segment_cost(
            std::slice::from_ref(&g),
            &Partition::from_assignment(&[0, 0, 0, 0, 1, 1, 1, 1]),
        );
        assert!(two < one, "{two} !< {one}");
        let found = local_search(
            &SegmentAggregate::from_graphs(8, &[g]),
            &Partition::single(8),
        );
        assert_eq!(found.assignment(), &[0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn cost_invariant_under_partition_respecting_relabel() {
        let g = StaticGraph::from_edges(6, [(0, 1), (1, 2), (3, 4), (2, 5)]);
        let part = Partition::from_assignment(&[0, 0, 1, 1, 2, 2]);
        // Swap vertices 0<->1 and 4<->5 (each within its own group).
        let perm = [1, 0, 2, 3, 5, 4];
        let h = StaticGraph::from_edges(6, g.edges().map(|(u, v)| (perm[u], perm[v])));
        assert_relative_eq!(
            segment_cost(&[g], &part),
            segment_cost(&[h], &part),
            epsilon = 1e-12
        );
    }

    #[test]
    fn constant_sequence_has_no_changes() {
        let g = StaticGraph::from_edges(6, [(0, 1), (1, 2), (2, 3), (4, 5)]);
        let seq = GraphSequence::new(6, vec![g; 8], 1);
        let ws = apply_uniform(&seq, 1).unwrap();
        assert!(graphscope_detect(&ws).times.is_empty());
    }

    #[test]
    fn single_window_has_no_changes() {
        let seq = GraphSequence::new(6, vec![clique(6, 0..3); 4], 1);
        let ws = apply_uniform(&seq, 4).unwrap();
        assert!(graphscope_detect(&ws).times.is_empty());
    }

    #[test]
    fn change_reported_at_initial_resolution() {
        let n = 12;
        let mut graphs = vec![clique(n, 0..6); 6];
        graphs.extend(vec![clique(n, 6..12); 6]);
        let seq = GraphSequence::new(n, graphs, 1);
        let ws = apply_uniform(&seq, 2).unwrap();
        assert_eq!(graphscope_detect(&ws).times, vec![7]);
    }

    #[test]
    fn pr_auc_examples() {
        assert_eq!(cp_pr_auc(&[2], &[2], 10), 1.0);
        assert_eq!(cp_pr_auc(&[], &[2], 10), 0.0);
        assert_eq!(cp_pr_auc(&[2], &[], 10), 0.0);
        assert_relative_eq!(cp_pr_auc(&[2], &[2, 8], 10), 0.7, epsilon = 1e-12);
    }
}
