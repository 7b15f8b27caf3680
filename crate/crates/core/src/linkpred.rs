//! Katz link prediction and average-precision scoring of ranked pairs.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::TaskError;
use crate::graph::{GraphSequence, Pair, StaticGraph};
use crate::windowing::{last_uniform_window, WindowedSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "max_len")]
pub enum KatzMode {
    /// Closed form `(I - beta A)^-1 - I`; fails when the series diverges.
    Exact,
    /// Closed form when it converges, otherwise the series truncated at this length.
    ExactOrTruncated(usize),
    /// `sum_{l=1..L} beta^l A^l`.
    Truncated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatzParams {
    pub beta: f64,
    pub mode: KatzMode,
}

impl Default for KatzParams {
    fn default() -> Self {
        Self {
            beta: 0.005,
            mode: KatzMode::ExactOrTruncated(8),
        }
    }
}

/// Which edges of the next graph count as "new links".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewLinkRule {
    /// Edges absent from the most recent windowed graph. Existing edges of that
    /// graph are left out of the ranking.
    #[default]
    AbsentFromWindowed,
    /// Edges absent from the previous raw step. The ranking then covers every
    /// active pair, existing edges included.
    AbsentFromPrevious,
}

/// Katz scores among the vertices of non-zero degree.
#[derive(Debug, Clone)]
pub struct KatzMatrix {
    active: Vec<usize>,
    slot: Vec<Option<usize>>,
    scores: DMatrix<f64>,
}

impl KatzMatrix {
    /// Score of `{u, v}`; zero when either endpoint is isolated.
    pub fn score(&self, u: usize, v: usize) -> f64 {
        match (
            self.slot.get(u).copied().flatten(),
            self.slot.get(v).copied().flatten(),
        ) {
            (Some(i), Some(j)) => self.scores[(i, j)],
            _ => 0.0,
        }
    }

    /// Vertices with non-zero degree, ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_radius(adj: &DMatrix<f64>) -> f64 {
    if adj.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(adj.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, l| m.max(l.abs()))
}

fn truncated_series(adj: &DMatrix<f64>, beta: f64, max_len: usize) -> DMatrix<f64> {
    let step = adj * beta;
    let mut term = step.clone();
    let mut acc = step.clone();
    for _ in 1..max_len {
        term = &term * &step;
        acc += &term;
    }
    acc
}

pub fn katz_matrix(g: &StaticGraph, params: &KatzParams) -> Result<KatzMatrix, TaskError> {
    let deg = g.degrees();
    let active: Vec<usize> = (0..g.n()).filter(|&v| deg[v] > 0).collect();
    let mut slot = vec![None; g.n()];
    for (i, &v) in active.iter().enumerate() {
        slot[v] = Some(i);
    }
    let k = active.len();
    let mut adj = DMatrix::<f64>::zeros(k, k);
    for (u, v) in g.edges() {
        let (i, j) = (slot[u].unwrap(), slot[v].unwrap());
        adj[(i, j)] = 1.0;
        adj[(j, i)] = 1.0;
    }

    let scores = if k == 0 {
        adj
    } else {
        let exact = |adj: &DMatrix<f64>| -> Result<DMatrix<f64>, TaskError> {
            let product = params.beta * spectral_radius(adj);
            if product >= 1.0 {
                return Err(TaskError::KatzDiverges { product });
            }
            let id = DMatrix::<f64>::identity(k, k);
            let inv = (&id - adj * params.beta)
                .lu()
                .try_inverse()
                .ok_or(TaskError::KatzDiverges { product })?;
            Ok(inv - id)
        };
        let raw = match params.mode {
            KatzMode::Exact => exact(&adj)?,
            KatzMode::ExactOrTruncated(l) => {
                exact(&adj).unwrap_or_else(|_| truncated_series(&adj, params.beta, l))
            }
            KatzMode::Truncated(l) => truncated_series(&adj, params.beta, l),
        };
        (&raw + raw.transpose()) * 0.5
    };
    Ok(KatzMatrix {
        active,
        slot,
        scores,
    })
}

/// Candidate pairs ordered by descending score, ties by ascending pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoredPairs {
    entries: Vec<(Pair, f64)>,
}

impl ScoredPairs {
    /// Sorts arbitrary entries into ranking order.
    pub fn from_unsorted(mut entries: Vec<(Pair, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Self { entries }
    }

    pub fn entries(&self) -> &[(Pair, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ranks non-adjacent pairs of active vertices by Katz score.
pub fn katz_scores(g: &StaticGraph, params: &KatzParams) -> Result<ScoredPairs, TaskError> {
    katz_ranking(g, params, false)
}

/// Like [`katz_scores`], optionally keeping existing edges in the ranking.
pub fn katz_ranking(
    g: &StaticGraph,
    params: &KatzParams,
    include_existing: bool,
) -> Result<ScoredPairs, TaskError> {
    let m = katz_matrix(g, params)?;
    let k = m.active.len();
    let mut entries = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let (u, v) = (m.active[i], m.active[j]);
            if include_existing || !g.contains(u, v) {
                entries.push(((u, v), m.scores[(i, j)]));
            }
        }
    }
    Ok(ScoredPairs::from_unsorted(entries))
}

/// Average precision of a ranking; `None` when there are no positives.
///
/// Positives missing from the ranking contribute zero precision.
pub fn ranking_pr_auc(ranked: &ScoredPairs, positives: &BTreeSet<Pair>) -> Option<f64> {
    if positives.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, (p, _)) in ranked.entries.iter().enumerate() {
        if positives.contains(p) {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
            if hits == positives.len() {
                break;
            }
        }
    }
    Some(sum / positives.len() as f64)
}

/// Scores `scoring` against the new links of `next`.
///
/// `previous` is the last raw step before `next`, used by
/// [`NewLinkRule::AbsentFromPrevious`].
pub fn score_prediction(
    scoring: &StaticGraph,
    previous: &StaticGraph,
    next: &StaticGraph,
    params: &KatzParams,
    rule: NewLinkRule,
) -> Result<Option<f64>, TaskError> {
    let reference = match rule {
        NewLinkRule::AbsentFromWindowed => scoring,
        NewLinkRule::AbsentFromPrevious => previous,
    };
    let positives: BTreeSet<Pair> = next
        .edges()
        .filter(|&(u, v)| !reference.contains(u, v))
        .collect();
    if positives.is_empty() {
        return Ok(None);
    }
    let include_existing = rule == NewLinkRule::AbsentFromPrevious;
    let ranked = katz_ranking(scoring, params, include_existing)?;
    Ok(ranking_pr_auc(&ranked, &positives))
}

/// One online prediction: the last windowed graph predicts `next`.
pub fn online_step_score(
    history: &WindowedSequence<'_>,
    next: &StaticGraph,
    params: &KatzParams,
    rule: NewLinkRule,
) -> Result<Option<f64>, TaskError> {
    let previous = history
        .source()
        .graphs()
        .last()
        .expect("history is nonempty");
    score_prediction(history.last(), previous, next, params, rule)
}

/// Score for predicting `next` from `history` windowed uniformly at `w`.
///
/// A `w` longer than the history puts the whole history in one window.
pub fn window_step_score(
    n: usize,
    history: &[StaticGraph],
    w: usize,
    next: &StaticGraph,
    params: &KatzParams,
    rule: NewLinkRule,
) -> Result<Option<f64>, TaskError> {
    let last = last_uniform_window(n, history, w);
    score_prediction(&last, history.last().unwrap(), next, params, rule)
}

/// Mean step score of a fixed window size over a sequence: every step
/// `i >= 2` is predicted from steps `1..i`. Steps without new links are
/// skipped; `None` if every step is skipped.
pub fn fixed_size_online_score(
    seq: &GraphSequence,
    w: usize,
    params: &KatzParams,
    rule: NewLinkRule,
) -> Result<Option<f64>, TaskError> {
    let graphs = seq.graphs();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 1..graphs.len() {
        if let Some(s) = window_step_score(seq.n(), &graphs[..i], w, &graphs[i], params, rule)? {
            total += s;
            count += 1;
        }
    }
    Ok((count > 0).then(|| total / count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::windowing::apply_uniform;
    use approx::assert_relative_eq;

    fn exact() -> KatzParams {
        KatzParams {
            beta: 0.005,
            mode: KatzMode::Exact,
        }
    }

    #[test]
    fn empty_graph_has_no_candidates() {
        let r = katz_scores(&StaticGraph::empty(4), &exact()).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn single_edge_geometric_series() {
        let g = StaticGraph::from_edges(3, [(0, 1)]);
        let m = katz_matrix(&g, &exact()).unwrap();
        let b: f64 = 0.005;
        assert_relative_eq!(m.score(0, 1), b / (1.0 - b * b), max_relative = 1e-12);
        assert_eq!(m.score(0, 2), 0.0);
        assert!(katz_scores(&g, &exact()).unwrap().is_empty());
    }

    #[test]
    fn path_scores_match_walk_counts() {
        // Walks 0->2 on a path of three: lengths 2, 4, 6, ... with 2^(k-1) walks of length 2k.
        let g = StaticGraph::from_edges(3, [(0, 1), (1, 2)]);
        let m = katz_matrix(&g, &exact()).unwrap();
        let b: f64 = 0.005;
        let brute: f64 = (1..=6).map(|k| 2f64.powi(k - 1) * b.powi(2 * k)).sum();
        assert!((m.score(0, 2) - brute).abs() < 1e-12);
        let r = katz_scores(&g, &exact()).unwrap();
        assert_eq!(r.entries().len(), 1);
        assert_eq!(r.entries()[0].0, (0, 2));
    }

    #[test]
    fn divergent_exact_solve_is_reported_and_fallback_works() {
        let g = StaticGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        let p = KatzParams {
            beta: 0.6,
            mode: KatzMode::Exact,
        };
        assert!(matches!(
            katz_matrix(&g, &p),
            Err(TaskError::KatzDiverges { .. })
        ));
        let p = KatzParams {
            beta: 0.6,
            mode: KatzMode::ExactOrTruncated(3),
        };
        let m = katz_matrix(&g, &p).unwrap();
        // Triangle walks 0->1: length1: 1, length2: 1, length3: 3.
        let expected = 0.6 + 0.36 + 3.0 * 0.216;
        assert_relative_eq!(m.score(0, 1), expected, max_relative = 1e-12);
    }

    #[test]
    fn ap_examples() {
        let ranked = ScoredPairs::from_unsorted(vec![
            ((0, 1), 0.9),
            ((0, 2), 0.8),
            ((0, 3), 0.7),
            ((0, 4), 0.6),
        ]);
        let top = BTreeSet::from([(0, 1), (0, 2)]);
        assert_eq!(ranking_pr_auc(&ranked, &top), Some(1.0));
        let second = BTreeSet::from([(0, 2)]);
        assert_eq!(ranking_pr_auc(&ranked, &second), Some(0.5));
        let missing = BTreeSet::from([(5, 6)]);
        assert_eq!(ranking_pr_auc(&ranked, &missing), Some(0.0));
        assert_eq!(ranking_pr_auc(&ranked, &BTreeSet::new()), None);
    }

    #[test]
    fn ties_break_by_pair_order() {
        let r = ScoredPairs::from_unsorted(vec![((2, 3), 1.0), ((0, 5), 1.0), ((1, 2), 2.0)]);
        let order: Vec<_> = r.entries().iter().map(|e| e.0).collect();
        assert_eq!(order, vec![(1, 2), (0, 5), (2, 3)]);
    }

    #[test]
    fn online_step_examples() {
        let path = StaticGraph::from_edges(3, [(0, 1), (1, 2)]);
        let seq = GraphSequence::new(3, vec![path.clone()], 1);
        let hist = apply_uniform(&seq, 1).unwrap();
        let p = KatzParams::default();
        let rule = NewLinkRule::AbsentFromWindowed;
        assert_eq!(online_step_score(&hist, &path, &p, rule).unwrap(), None);
        let next = StaticGraph::from_edges(3, [(0, 2)]);
        assert_eq!(
            online_step_score(&hist, &next, &p, rule).unwrap(),
            Some(1.0)
        );
    }

    #[test]
    fn previous_step_rule_ranks_existing_edges() {
        // H_last = {01, 12}; G_{i-1} = {12}; next = {01}: new under the raw rule only.
        let g1 = StaticGraph::from_edges(3, [(0, 1)]);
        let g2 = StaticGraph::from_edges(3, [(1, 2)]);
        let seq = GraphSequence::new(3, vec![g1.clone(), g2], 1);
        let hist = apply_uniform(&seq, 2).unwrap();
        let p = KatzParams::default();
        assert_eq!(
            online_step_score(&hist, &g1, &p, NewLinkRule::AbsentFromWindowed).unwrap(),
            None
        );
        let s = online_step_score(&hist, &g1, &p, NewLinkRule::AbsentFromPrevious)
            .unwrap()
            .unwrap();
        // Edges outrank the 2-walk pair {0,2}.
        assert_eq!(s, 1.0);
    }

    #[test]
    fn fixed_size_score_skips_quiet_steps() {
        let a = StaticGraph::from_edges(3, [(0, 1), (1, 2)]);
        let b = StaticGraph::from_edges(3, [(0, 2)]);
        let seq = GraphSequence::new(3, vec![a.clone(), a.clone(), b], 1);
        let s = fixed_size_online_score(&seq, 1, &KatzParams::default(), NewLinkRule::default())
            .unwrap();
        assert_eq!(s, Some(1.0));
        let quiet = GraphSequence::new(3, vec![a.clone(), a], 1);
        assert_eq!(
            fixed_size_online_score(&quiet, 1, &KatzParams::default(), NewLinkRule::default())
                .unwrap(),
            None
        );
    }
}
