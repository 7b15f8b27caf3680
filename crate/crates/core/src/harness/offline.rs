use rayon::prelude::*;

use crate::archive::Dataset;
use crate::attr::{batch_leave_out_scores, default_batch_size, roc_auc};
use crate::changepoint::{cp_pr_auc, graphscope_detect};
use crate::error::HarnessError;
use crate::graph::GraphSequence;
use crate::ingest::{ChangePointLabels, VertexAttributes};
use crate::selectors::{
    adage_select, entropy_select, fixed_select, fourier_select, jaccard_select,
    random_windowing_seeded, supervised_offline_select, AttributeOracle, ChangePointOracle,
    FixedMode, LinkPredictionOracle, OfflineSelector, TaskOracle,
};
use crate::windowing::{apply_windowing, Windowing};

use super::{cell_seed, Aggregation, ExperimentReport, IntervalPlan, PairResult, Task, TaskParams};

/// What a selector may know about the training interval: its edges and ground truth.
#[derive(Debug, Clone)]
pub struct TrainView<'a> {
    pub seq: GraphSequence,
    pub change_points: Option<ChangePointLabels>,
    pub attributes: Option<&'a VertexAttributes>,
}

/// Chooses the test windowing. The test interval is passed as edges only.
pub fn select_offline(
    selector: OfflineSelector,
    task: Task,
    train: &TrainView<'_>,
    test: &GraphSequence,
    params: &TaskParams,
    seed: u64,
) -> Result<Windowing, HarnessError> {
    let len = test.len();
    let uniform = |w: usize| Windowing::uniform(len, w.clamp(1, len));
    let windowing = match selector {
        OfflineSelector::HandPicked => uniform(fixed_select(FixedMode::HandPicked, len))?,
        OfflineSelector::NoTime => uniform(fixed_select(FixedMode::NoTime, len))?,
        OfflineSelector::Random => random_windowing_seeded(len, seed)?,
        OfflineSelector::Fourier => uniform(fourier_select(test))?,
        OfflineSelector::Jaccard => uniform(jaccard_select(test, params.plateau))?,
        OfflineSelector::Adage => uniform(adage_select(test, &params.adage))?,
        OfflineSelector::Entropy => entropy_select(test),
        OfflineSelector::Supervised => {
            let oracle: Box<dyn TaskOracle> = match task {
                Task::ChangePoint => Box::new(ChangePointOracle {
                    truth: train.change_points.clone().unwrap_or_default(),
                }),
                Task::Attribute => Box::new(AttributeOracle {
                    attributes: train
                        .attributes
                        .ok_or(HarnessError::MissingData("vertex attributes"))?
                        .clone(),
                    kernel: params.kernel,
                    batch: params.batch,
                }),
                Task::LinkPrediction => Box::new(LinkPredictionOracle {
                    katz: params.katz,
                    rule: params.new_links,
                }),
            };
            uniform(supervised_offline_select(&train.seq, oracle.as_ref()).window)?
        }
    };
    Ok(windowing)
}

enum PairOutcome {
    ChangePoint(f64),
    Attribute(Vec<(f64, bool)>),
}

/// Offline protocol for change-point and attribute prediction.
///
/// Change-point scores are averaged over pairs; attribute predictions from
/// every test interval are pooled into one ROC-AUC.
pub fn run_offline(
    dataset: &Dataset,
    dataset_id: &str,
    plan: &IntervalPlan,
    selector: OfflineSelector,
    task: Task,
    params: &TaskParams,
    seed: u64,
) -> Result<ExperimentReport, HarnessError> {
    if task == Task::LinkPrediction {
        return Err(HarnessError::Unsupported {
            task: task.to_string(),
            what: "the offline protocol".into(),
        });
    }
    let seq = &dataset.seq;
    let truth = match task {
        Task::ChangePoint => Some(
            dataset
                .change_points
                .as_ref()
                .ok_or(HarnessError::MissingData("change points"))?,
        ),
        _ => None,
    };
    let attributes = match task {
        Task::Attribute => Some(
            dataset
                .attributes
                .as_ref()
                .ok_or(HarnessError::MissingData("vertex attributes"))?,
        ),
        _ => None,
    };
    let selector_index = OfflineSelector::ALL
        .iter()
        .position(|&s| s == selector)
        .unwrap();
    let pairs = plan.pairs();

    let results: Vec<Result<(PairResult, PairOutcome, Option<String>), HarnessError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(train, test))| {
            let train_truth = truth.map(|t| t.restrict(train.start, train.end));
            let mut note = None;
            if selector == OfflineSelector::Supervised
                && train_truth.as_ref().is_some_and(|t| t.is_empty())
            {
                note = Some(format!(
                    "pair {}: training interval has no change points",
                    k + 1
                ));
            }
            let view = TrainView {
                seq: seq.slice(train.start, train.end),
                change_points: train_truth,
                attributes,
            };
            let test_seq = seq.slice(test.start, test.end);
            let windowing = select_offline(
                selector,
                task,
                &view,
                &test_seq,
                params,
                cell_seed(seed, selector_index, k),
            )?;
            let ws = apply_windowing(&test_seq, &windowing)?;
            let (score, scored, outcome) = match task {
                Task::ChangePoint => {
                    let found = graphscope_detect(&ws);
                    let test_truth = truth.unwrap().restrict(test.start, test.end);
                    let s = cp_pr_auc(&found.times, test_truth.times(), test_seq.len());
                    (Some(s), 1, PairOutcome::ChangePoint(s))
                }
                _ => {
                    let attrs = attributes.unwrap();
                    let batch = params
                        .batch
                        .unwrap_or_else(|| default_batch_size(attrs.labelled().len()));
                    let scores = batch_leave_out_scores(&ws, &ws, attrs, batch, &params.kernel)?;
                    (
                        roc_auc(&scores).ok(),
                        scores.len(),
                        PairOutcome::Attribute(scores),
                    )
                }
            };
            Ok((
                PairResult {
                    pair: k + 1,
                    train,
                    test,
                    window: windowing.uniform_size(),
                    lengths: windowing.lengths(),
                    score,
                    scored,
                    steps: Vec::new(),
                },
                outcome,
                note,
            ))
        })
        .collect();

    let mut pair_results = Vec::new();
    let mut notes = Vec::new();
    let mut cp_scores = Vec::new();
    let mut pooled = Vec::new();
    for r in results {
        let (pr, outcome, note) = r?;
        notes.extend(note);
        match outcome {
            PairOutcome::ChangePoint(s) => cp_scores.push(s),
            PairOutcome::Attribute(s) => pooled.extend(s),
        }
        pair_results.push(pr);
    }
    let (aggregation, aggregate) = match task {
        Task::ChangePoint => (
            Aggregation::Mean,
            (!cp_scores.is_empty()).then(|| cp_scores.iter().sum::<f64>() / cp_scores.len() as f64),
        ),
        _ => (Aggregation::Pooled, roc_auc(&pooled).ok()),
    };
    Ok(ExperimentReport {
        dataset: dataset_id.to_string(),
        task,
        selector: selector.name().to_string(),
        aggregation,
        seed,
        config_hash: None,
        params: *params,
        intervals: plan.intervals.clone(),
        pairs: pair_results,
        aggregate,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StaticGraph;
    use crate::harness::split_intervals;

    fn clique(n: usize, vs: std::ops::Range<usize>) -> StaticGraph {
        let vs: Vec<usize> = vs.collect();
        let mut g = StaticGraph::empty(n);
        for (i, &u) in vs.iter().enumerate() {
            for &v in &vs[i + 1..] {
                g.insert(u, v);
            }
        }
        g
    }

    #[test]
    fn hand_picked_changepoint_matches_direct_detection() {
        let n = 12;
        let graphs: Vec<StaticGraph> = (1..=12)
            .map(|t| {
                if (4..=6).contains(&t) || t >= 10 {
                    clique(n, 6..12)
                } else {
                    clique(n, 0..6)
                }
            })
            .collect();
        let seq = GraphSequence::new(n, graphs, 1);
        let mut ds = Dataset::new(seq.clone());
        ds.change_points = Some(ChangePointLabels::new(vec![4, 7, 10], 12).unwrap());
        let plan = split_intervals(12, 2).unwrap();
        let report = run_offline(
            &ds,
            "toy",
            &plan,
            OfflineSelector::HandPicked,
            Task::ChangePoint,
            &TaskParams::default(),
            0,
        )
        .unwrap();
        let test = seq.slice(7, 12);
        let ws = apply_windowing(&test, &Windowing::uniform(6, 1).unwrap()).unwrap();
        let direct = cp_pr_auc(&graphscope_detect(&ws).times, &[1, 4], 6);
        assert_eq!(report.aggregate, Some(direct));
        assert_eq!(report.aggregation, Aggregation::Mean);
    }

    #[test]
    fn linkpred_is_rejected_offline() {
        let seq = GraphSequence::new(2, vec![StaticGraph::empty(2); 4], 1);
        let ds = Dataset::new(seq);
        let plan = split_intervals(4, 2).unwrap();
        let r = run_offline(
            &ds,
            "x",
            &plan,
            OfflineSelector::HandPicked,
            Task::LinkPrediction,
            &TaskParams::default(),
            0,
        );
        assert!(matches!(r, Err(HarnessError::Unsupported { .. })));
    }
}
