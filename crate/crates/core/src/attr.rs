//! Time-varying relational classifier for a binary vertex attribute.
//!
//! The model is a weighted relational naive Bayes: for class `c`,
//!
//! ```text
//! log P(c | v) ∝ log P(c)
//!              + Σ_features log P(x_f(v) | c)
//!              + Σ_windows Σ_{u ∈ N_i(v), u labelled} k(i) · log P(class(u) | c)
//! ```
//!
//! where `k(i) = (1-θ)^(m-i) θ` weights window `i` of `m`. Categorical
//! features use add-one smoothing over the population's value vocabulary;
//! continuous features use a per-class Gaussian with a variance floor. The
//! neighbour-class table holds kernel-weighted contact counts, add-one smoothed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::TaskError;
use crate::ingest::{FeatureKind, FeatureValue, VertexAttributes};
use crate::windowing::WindowedSequence;

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub theta: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { theta: 0.5 }
    }
}

impl KernelParams {
    pub fn new(theta: f64) -> Option<Self> {
        (theta > 0.0 && theta < 1.0).then_some(Self { theta })
    }
}

/// `(1-θ)^(t-i) θ` for window `i` of `t` (1-based).
pub fn edge_weight(t: usize, i: usize, theta: f64) -> f64 {
    debug_assert!(1 <= i && i <= t);
    (1.0 - theta).powi((t - i) as i32) * theta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum FeatureModel {
    /// Per-class smoothed log-probabilities by value; `unseen` for values outside the vocabulary.
    Categorical {
        log_prob: [BTreeMap<String, f64>; 2],
        unseen: [f64; 2],
    },
    /// Per-class `(mean, variance)`; `None` when a class has no observations.
    Gaussian { params: [Option<(f64, f64)>; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvrcModel {
    log_prior: [f64; 2],
    features: Vec<FeatureModel>,
    /// `neighbor_counts[c][c']`: kernel-weighted contacts from class `c` to class `c'`.
    neighbor_counts: [[f64; 2]; 2],
    log_neighbor: [[f64; 2]; 2],
    known: BTreeMap<usize, bool>,
    theta: f64,
    /// Classes with no labelled member in the fitting set.
    pub absent_classes: Vec<bool>,
}

impl TvrcModel {
    /// Class prior `[P(negative), P(positive)]`.
    pub fn prior(&self) -> [f64; 2] {
        [self.log_prior[0].exp(), self.log_prior[1].exp()]
    }

    pub fn neighbor_counts(&self) -> [[f64; 2]; 2] {
        self.neighbor_counts
    }

    /// `P(neighbour class | own class)` as `[own][neighbour]`.
    pub fn neighbor_likelihood(&self) -> [[f64; 2]; 2] {
        self.log_neighbor.map(|row| row.map(f64::exp))
    }
}

fn class_index(positive: bool) -> usize {
    positive as usize
}

fn fit_features(
    attrs: &VertexAttributes,
    known: &BTreeMap<usize, bool>,
    variance_floor: f64,
) -> Vec<FeatureModel> {
    attrs
        .columns()
        .iter()
        .enumerate()
        .map(|(col, spec)| match spec.kind {
            FeatureKind::Categorical => {
                let vocab: BTreeSet<&str> = (0..attrs.n())
                    .filter_map(|v| match attrs.feature(v, col) {
                        Some(FeatureValue::Categorical(s)) => Some(s.as_str()),
                        _ => None,
                    })
                    .collect();
                let mut counts: [BTreeMap<&str, f64>; 2] = Default::default();
                let mut totals = [0.0f64; 2];
                for (&v, &label) in known {
                    if let Some(FeatureValue::Categorical(s)) = attrs.feature(v, col) {
                        *counts[class_index(label)].entry(s.as_str()).or_default() += 1.0;
                        totals[class_index(label)] += 1.0;
                    }
                }
                // One extra slot for values never seen in the population.
                let width = vocab.len() as f64 + 1.0;
                let log_prob = [0, 1].map(|c| {
                    vocab
                        .iter()
                        .map(|&s| {
                            let k = counts[c].get(s).copied().unwrap_or(0.0);
                            (s.to_string(), ((k + 1.0) / (totals[c] + width)).ln())
                        })
                        .collect()
                });
                let unseen = [0, 1].map(|c| (1.0 / (totals[c] + width)).ln());
                FeatureModel::Categorical { log_prob, unseen }
            }
            FeatureKind::Continuous => {
                let mut xs: [Vec<f64>; 2] = Default::default();
                for (&v, &label) in known {
                    if let Some(FeatureValue::Continuous(x)) = attrs.feature(v, col) {
                        xs[class_index(label)].push(*x);
                    }
                }
                let params = [0, 1].map(|c| {
                    let s = &xs[c];
                    if s.is_empty() {
                        return None;
                    }
                    let mean = s.iter().sum::<f64>() / s.len() as f64;
                    let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.len() as f64;
                    Some((mean, var.max(variance_floor)))
                });
                FeatureModel::Gaussian { params }
            }
        })
        .collect()
}

/// Fits the classifier using only the labels of `known`.
pub fn fit_tvrc(
    ws: &WindowedSequence<'_>,
    attrs: &VertexAttributes,
    known: &BTreeSet<usize>,
    kernel: &KernelParams,
) -> Result<TvrcModel, TaskError> {
    fit_tvrc_with_floor(ws, attrs, known, kernel, DEFAULT_VARIANCE_FLOOR)
}

pub fn fit_tvrc_with_floor(
    ws: &WindowedSequence<'_>,
    attrs: &VertexAttributes,
    known: &BTreeSet<usize>,
    kernel: &KernelParams,
    variance_floor: f64,
) -> Result<TvrcModel, TaskError> {
    let known: BTreeMap<usize, bool> = known
        .iter()
        .filter_map(|&v| attrs.target(v).map(|t| (v, t)))
        .collect();
    if known.is_empty() {
        return Err(TaskError::NoKnownVertices);
    }

    let mut class_counts = [0.0f64; 2];
    for &label in known.values() {
        class_counts[class_index(label)] += 1.0;
    }
    let total = class_counts[0] + class_counts[1];
    let log_prior = [0, 1].map(|c| ((class_counts[c] + 1.0) / (total + 2.0)).ln());
    let absent_classes = [false, true]
        .into_iter()
        .filter(|&c| class_counts[class_index(c)] == 0.0)
        .collect();

    let m = ws.len();
    let mut neighbor_counts = [[0.0f64; 2]; 2];
    for (i, g) in ws.graphs().iter().enumerate() {
        let w = edge_weight(m, i + 1, kernel.theta);
        for (u, v) in g.edges() {
            if let (Some(&lu), Some(&lv)) = (known.get(&u), known.get(&v)) {
                neighbor_counts[class_index(lu)][class_index(lv)] += w;
                neighbor_counts[class_index(lv)][class_index(lu)] += w;
            }
        }
    }
    let log_neighbor = neighbor_counts.map(|row| {
        let t = row[0] + row[1];
        row.map(|k| ((k + 1.0) / (t + 2.0)).ln())
    });

    Ok(TvrcModel {
        log_prior,
        features: fit_features(attrs, &known, variance_floor),
        neighbor_counts,
        log_neighbor,
        known,
        theta: kernel.theta,
        absent_classes,
    })
}

fn gaussian_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + (2.0 * std::f64::consts::PI * var).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: bool,
    /// Posterior probability of the positive class.
    pub score: f64,
}

/// Per-class unnormalized log posterior of `vertex`.
pub fn log_scores(
    model: &TvrcModel,
    ws: &WindowedSequence<'_>,
    attrs: &VertexAttributes,
    vertex: usize,
) -> [f64; 2] {
    let mut out = model.log_prior;
    for (col, fm) in model.features.iter().enumerate() {
        match (fm, attrs.feature(vertex, col)) {
            (
                FeatureModel::Categorical { log_prob, unseen },
                Some(FeatureValue::Categorical(s)),
            ) => {
                for c in 0..2 {
                    out[c] += log_prob[c].get(s).copied().unwrap_or(unseen[c]);
                }
            }
            (FeatureModel::Gaussian { params }, Some(FeatureValue::Continuous(x))) => {
                if let [Some((m0, v0)), Some((m1, v1))] = params {
                    out[0] += gaussian_log_pdf(*x, *m0, *v0);
                    out[1] += gaussian_log_pdf(*x, *m1, *v1);
                }
            }
            _ => {}
        }
    }
    let m = ws.len();
    for (i, g) in ws.graphs().iter().enumerate() {
        let w = edge_weight(m, i + 1, model.theta);
        for (a, b) in g.edges() {
            let other = if a == vertex {
                b
            } else if b == vertex {
                a
            } else {
                continue;
            };
            if let Some(&lo) = model.known.get(&other) {
                for (c, slot) in out.iter_mut().enumerate() {
                    *slot += w * model.log_neighbor[c][class_index(lo)];
                }
            }
        }
    }
    out
}

/// Most probable class and the positive-class posterior.
pub fn predict_attribute(
    model: &TvrcModel,
    ws: &WindowedSequence<'_>,
    attrs: &VertexAttributes,
    vertex: usize,
) -> Prediction {
    let [l0, l1] = log_scores(model, ws, attrs, vertex);
    let score = 1.0 / (1.0 + (l0 - l1).exp());
    Prediction {
        label: l1 > l0,
        score,
    }
}

/// Default batch size: a tenth of the labelled population, rounded up.
pub fn default_batch_size(labelled: usize) -> usize {
    labelled.div_ceil(10).max(1)
}

/// Batch leave-out predictions: labelled vertices in ascending id order are
/// cut into batches of `batch`; each batch is hidden, the model is fitted on
/// `fit_ws` with the rest, and the batch is predicted from `eval_ws`.
///
/// Returns `(positive posterior, true label)` for every labelled vertex.
pub fn batch_leave_out_scores(
    fit_ws: &WindowedSequence<'_>,
    eval_ws: &WindowedSequence<'_>,
    attrs: &VertexAttributes,
    batch: usize,
    kernel: &KernelParams,
) -> Result<Vec<(f64, bool)>, TaskError> {
    let labelled = attrs.labelled();
    if batch == 0 || batch >= labelled.len() {
        return Err(TaskError::BadBatchSize {
            batch,
            population: labelled.len(),
        });
    }
    let mut out = Vec::with_capacity(labelled.len());
    for chunk in labelled.chunks(batch) {
        let hidden: BTreeSet<usize> = chunk.iter().copied().collect();
        let known: BTreeSet<usize> = labelled
            .iter()
            .copied()
            .filter(|v| !hidden.contains(v))
            .collect();
        let model = fit_tvrc(fit_ws, attrs, &known, kernel)?;
        for &v in chunk {
            let p = predict_attribute(&model, eval_ws, attrs, v);
            out.push((p.score, attrs.target(v).unwrap()));
        }
    }
    Ok(out)
}

/// ROC-AUC of batch leave-out predictions on a single windowed sequence.
pub fn batch_leave_out_auc(
    ws: &WindowedSequence<'_>,
    attrs: &VertexAttributes,
    batch: usize,
    kernel: &KernelParams,
) -> Result<f64, TaskError> {
    let scores = batch_leave_out_scores(ws, ws, attrs, batch, kernel)?;
    roc_auc(&scores)
}

/// ROC-AUC as the Mann-Whitney statistic with midranks for ties.
pub fn roc_auc(scored: &[(f64, bool)]) -> Result<f64, TaskError> {
    let positives = scored.iter().filter(|s| s.1).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(TaskError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));

    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scored[order[j]].0 == scored[order[i]].0 {
            j += 1;
        }
        // Ranks i+1..=j share their mean.
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * order[i..j].iter().filter(|&&k| scored[k].1).count() as f64;
        i = j;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}
