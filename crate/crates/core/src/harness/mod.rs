//! Experimental protocol: consecutive train/test intervals, offline and
//! online evaluation, and the cross-task analyses built on score curves.

mod analysis;
mod offline;
mod online;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attr::KernelParams;
use crate::error::HarnessError;
use crate::linkpred::{KatzParams, NewLinkRule};
use crate::selectors::{AdageParams, SelectorParams, DEFAULT_PLATEAU_FRACTION};
use crate::windowing::Span;

pub use analysis::{
    hyperparam_sweep, midranks, score_curves, spearman, spearman_table, stability_diff, table1,
    CrossTaskMatrix, ScoreCurves, SpearmanRow, SweepAxis, SweepCell,
};
pub use offline::{run_offline, select_offline, TrainView};
pub use online::{run_online, OnlineOptions, OnlineStepLog, Phase};

/// Consecutive intervals covering `1..=T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalPlan {
    pub intervals: Vec<Span>,
}

impl IntervalPlan {
    /// `(train, test)` for every pair of consecutive intervals.
    pub fn pairs(&self) -> Vec<(Span, Span)> {
        self.intervals.windows(2).map(|p| (p[0], p[1])).collect()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Splits `1..=len` into `k` intervals whose lengths differ by at most one,
/// longer intervals first.
pub fn split_intervals(len: usize, k: usize) -> Result<IntervalPlan, HarnessError> {
    if k == 0 || k > len {
        return Err(HarnessError::BadSplit { len, k });
    }
    let (base, extra) = (len / k, len % k);
    let mut start = 1;
    let intervals = (0..k)
        .map(|i| {
            let l = base + usize::from(i < extra);
            let span = Span {
                start,
                end: start + l - 1,
            };
            start += l;
            span
        })
        .collect();
    Ok(IntervalPlan { intervals })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "linkpred")]
    LinkPrediction,
    #[serde(rename = "attribute")]
    Attribute,
    #[serde(rename = "changepoint")]
    ChangePoint,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::LinkPrediction, Task::Attribute, Task::ChangePoint];

    pub fn name(self) -> &'static str {
        match self {
            Task::LinkPrediction => "linkpred",
            Task::Attribute => "attribute",
            Task::ChangePoint => "changepoint",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}` (valid: linkpred, attribute, changepoint)"))
    }
}

/// Every tunable parameter of the task engines and selectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskParams {
    pub katz: KatzParams,
    pub new_links: NewLinkRule,
    pub kernel: KernelParams,
    /// Attribute batch size; `None` is a tenth of the labelled vertices.
    pub batch: Option<usize>,
    pub selector: SelectorParams,
    pub plateau: f64,
    pub adage: AdageParams,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self {
            katz: KatzParams::default(),
            new_links: NewLinkRule::default(),
            kernel: KernelParams::default(),
            batch: None,
            selector: SelectorParams::default(),
            plateau: DEFAULT_PLATEAU_FRACTION,
            adage: AdageParams::default(),
        }
    }
}

/// How pair scores become the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair: usize,
    pub train: Span,
    pub test: Span,
    /// Uniform size used on the test interval, if the windowing is uniform.
    pub window: Option<usize>,
    /// Window lengths of the test windowing (offline only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lengths: Vec<usize>,
    pub score: Option<f64>,
    /// Number of scored items: predictions online, labelled vertices for attributes.
    pub scored: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<OnlineStepLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub task: Task,
    pub selector: String,
    pub aggregation: Aggregation,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub params: TaskParams,
    pub intervals: Vec<Span>,
    pub pairs: Vec<PairResult>,
    pub aggregate: Option<f64>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One row per pair.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "task",
            "selector",
            "seed",
            "config_hash",
            "pair",
            "train_start",
            "train_end",
            "test_start",
            "test_end",
            "window",
            "score",
            "scored",
        ])
        .expect("in-memory write");
        let hash = self.config_hash.clone().unwrap_or_default();
        for p in &self.pairs {
            w.write_record([
                self.dataset.clone(),
                self.task.to_string(),
                self.selector.clone(),
                self.seed.to_string(),
                hash.clone(),
                p.pair.to_string(),
                p.train.start.to_string(),
                p.train.end.to_string(),
                p.test.start.to_string(),
                p.test.end.to_string(),
                p.window.map_or(String::new(), |w| w.to_string()),
                p.score.map_or(String::new(), |s| s.to_string()),
                p.scored.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Seed for one experiment cell, derived from the master seed.
pub fn cell_seed(master: u64, selector: usize, pair: usize) -> u64 {
    let mut x = master ^ ((selector as u64) << 32) ^ pair as u64;
    for _ in 0..2 {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x = z ^ (z >> 31);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lengths(p: &IntervalPlan) -> Vec<usize> {
        p.intervals.iter().map(Span::len).collect()
    }

    #[test]
    fn split_examples() {
        assert_eq!(lengths(&split_intervals(12, 6).unwrap()), vec![2; 6]);
        assert_eq!(
            lengths(&split_intervals(13, 6).unwrap()),
            vec![3, 2, 2, 2, 2, 2]
        );
        assert!(matches!(
            split_intervals(5, 6),
            Err(HarnessError::BadSplit { len: 5, k: 6 })
        ));
        let p = split_intervals(17, 5).unwrap();
        assert_eq!(p.intervals[0].start, 1);
        assert_eq!(p.intervals[4].end, 17);
        for w in p.intervals.windows(2) {
            assert_eq!(w[0].end + 1, w[1].start);
        }
        assert_eq!(p.pairs().len(), 4);
    }

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(1, 0, 0), cell_seed(1, 0, 1));
        assert_ne!(cell_seed(1, 0, 0), cell_seed(1, 1, 0));
        assert_eq!(cell_seed(9, 2, 3), cell_seed(9, 2, 3));
    }

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.name()));
        }
    }
}
