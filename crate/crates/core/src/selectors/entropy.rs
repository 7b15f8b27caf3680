use nalgebra::{DMatrix, SymmetricEigen};

use crate::graph::{GraphSequence, StaticGraph};
use crate::windowing::Windowing;

const EIGEN_FLOOR: f64 = 1e-12;
/// A merge whose quality change is at most this is accepted.
const MERGE_TOLERANCE: f64 = 1e-12;

/// Von Neumann entropy (bits) of the trace-rescaled Laplacian.
///
/// Isolated vertices contribute nothing and are dropped before the
/// eigendecomposition; the empty graph has entropy 0.
pub fn von_neumann_entropy(g: &StaticGraph) -> f64 {
    let deg = g.degrees();
    let active: Vec<usize> = (0..g.n()).filter(|&v| deg[v] > 0).collect();
    if active.is_empty() {
        return 0.0;
    }
    let mut index = vec![usize::MAX; g.n()];
    for (i, &v) in active.iter().enumerate() {
        index[v] = i;
    }
    let k = active.len();
    let trace = (2 * g.edge_count()) as f64;
    let mut lap = DMatrix::<f64>::zeros(k, k);
    for (i, &v) in active.iter().enumerate() {
        lap[(i, i)] = deg[v] as f64 / trace;
    }
    for (u, v) in g.edges() {
        let (a, b) = (index[u], index[v]);
        lap[(a, b)] = -1.0 / trace;
        lap[(b, a)] = -1.0 / trace;
    }
    SymmetricEigen::new(lap)
        .eigenvalues
        .iter()
        .filter(|&&l| l > EIGEN_FLOOR)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Mean layer entropy minus the entropy of the union of all layers.
pub fn layer_quality(n: usize, layers: &[StaticGraph]) -> f64 {
    let mean = layers.iter().map(von_neumann_entropy).sum::<f64>() / layers.len() as f64;
    mean - von_neumann_entropy(&StaticGraph::union_of(n, layers))
}

struct Layer {
    graph: StaticGraph,
    entropy: f64,
    len: usize,
}

/// Greedy agglomeration of adjacent steps while merging does not raise the
/// layer quality. Picks the merge with the lowest quality change, leftmost on ties.
pub fn entropy_select(seq: &GraphSequence) -> Windowing {
    let n = seq.n();
    let mut layers: Vec<Layer> = seq
        .graphs()
        .iter()
        .map(|g| Layer {
            graph: g.clone(),
            entropy: von_neumann_entropy(g),
            len: 1,
        })
        .collect();
    let merged = |a: &Layer, b: &Layer| {
        let g = StaticGraph::union_of(n, &[a.graph.clone(), b.graph.clone()]);
        let h = von_neumann_entropy(&g);
        (g, h)
    };
    // candidates[i] merges layers i and i + 1.
    let mut candidates: Vec<(StaticGraph, f64)> =
        layers.windows(2).map(|p| merged(&p[0], &p[1])).collect();

    while layers.len() > 1 {
        let m = layers.len() as f64;
        let sum: f64 = layers.iter().map(|l| l.entropy).sum();
        let current = sum / m;
        let mut best: Option<(usize, f64)> = None;
        for (i, (_, h)) in candidates.iter().enumerate() {
            let next = (sum - layers[i].entropy - layers[i + 1].entropy + h) / (m - 1.0);
            let delta = next - current;
            if best.is_none_or(|(_, d)| delta < d) {
                best = Some((i, delta));
            }
        }
        let (i, delta) = best.unwrap();
        if delta > MERGE_TOLERANCE {
            break;
        }
        let (graph, entropy) = candidates.remove(i);
        let right = layers.remove(i + 1);
        layers[i] = Layer {
            graph,
            entropy,
            len: layers[i].len + right.len,
        };
        if i > 0 {
            candidates[i - 1] = merged(&layers[i - 1], &layers[i]);
        }
        if i < candidates.len() {
            candidates[i] = merged(&layers[i], &layers[i + 1]);
        }
    }
    let lengths: Vec<usize> = layers.iter().map(|l| l.len).collect();
    Windowing::from_lengths(&lengths).expect("layers cover the sequence")
}
