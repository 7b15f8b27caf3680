use crate::attr::{batch_leave_out_scores, default_batch_size, roc_auc, KernelParams};
use crate::changepoint::{cp_pr_auc, graphscope_detect};
use crate::error::TaskError;
use crate::graph::GraphSequence;
use crate::ingest::{ChangePointLabels, VertexAttributes};
use crate::linkpred::{fixed_size_online_score, KatzParams, NewLinkRule};
use crate::windowing::apply_uniform;

use super::TaskOracle;

/// Change-point detection scored against the training interval's labels.
#[derive(Debug, Clone)]
pub struct ChangePointOracle {
    /// Change points re-indexed to the training interval.
    pub truth: ChangePointLabels,
}

impl TaskOracle for ChangePointOracle {
    fn score(&self, train: &GraphSequence, w: usize) -> Result<f64, TaskError> {
        let ws = apply_uniform(train, w)?;
        let found = graphscope_detect(&ws);
        Ok(cp_pr_auc(&found.times, self.truth.times(), train.len()))
    }
}

/// Attribute prediction: the training interval is halved, the first half
/// fits the classifier and the second half is scored by batch leave-out.
#[derive(Debug, Clone)]
pub struct AttributeOracle {
    pub attributes: VertexAttributes,
    pub kernel: KernelParams,
    /// Batch size; `None` uses the default tenth of the labelled vertices.
    pub batch: Option<usize>,
}

impl AttributeOracle {
    pub fn batch_size(&self) -> usize {
        self.batch
            .unwrap_or_else(|| default_batch_size(self.attributes.labelled().len()))
    }
}

impl TaskOracle for AttributeOracle {
    fn score(&self, train: &GraphSequence, w: usize) -> Result<f64, TaskError> {
        let (fit, eval) = if train.len() == 1 {
            (train.clone(), train.clone())
        } else {
            let mid = train.len() / 2;
            (train.slice(1, mid), train.slice(mid + 1, train.len()))
        };
        let fit_ws = apply_uniform(&fit, w.min(fit.len()))?;
        let eval_ws = apply_uniform(&eval, w.min(eval.len()))?;
        let scores = batch_leave_out_scores(
            &fit_ws,
            &eval_ws,
            &self.attributes,
            self.batch_size(),
            &self.kernel,
        )?;
        roc_auc(&scores)
    }
}

/// Link prediction: mean step score of a fixed size over the training stream.
#[derive(Debug, Clone, Default)]
pub struct LinkPredictionOracle {
    pub katz: KatzParams,
    pub rule: NewLinkRule,
}

impl TaskOracle for LinkPredictionOracle {
    fn score(&self, train: &GraphSequence, w: usize) -> Result<f64, TaskError> {
        fixed_size_online_score(train, w, &self.katz, self.rule)?.ok_or(TaskError::NothingToScore)
    }
}
