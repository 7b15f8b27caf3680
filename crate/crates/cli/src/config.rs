use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use winscale_core::harness::OnlineOptions;
use winscale_core::selectors::{OfflineSelector, OnlineStrategy};
use winscale_core::{read_archive, split_intervals, Dataset, IntervalPlan, Task, TaskParams};

/// Grid for the online `M`/`B` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub m: Vec<usize>,
    pub b: Vec<usize>,
    #[serde(default = "default_fixed")]
    pub fixed: usize,
    #[serde(default = "default_strategy")]
    pub strategy: String,
}

fn default_fixed() -> usize {
    10
}

fn default_strategy() -> String {
    "algorithm1".into()
}

fn default_intervals() -> usize {
    6
}

/// Declarative description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Archive directory written by `ingest`.
    pub dataset: PathBuf,
    #[serde(default)]
    pub dataset_id: Option<String>,
    pub task: Task,
    pub selectors: Vec<String>,
    #[serde(default = "default_intervals")]
    pub intervals: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: TaskParams,
    #[serde(default)]
    pub online: OnlineOptions,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

pub enum Selection {
    Offline(Vec<OfflineSelector>),
    Online(Vec<OnlineStrategy>),
}

/// A config whose references all resolved.
pub struct Validated {
    pub config: RunConfig,
    pub hash: String,
    pub dataset: Dataset,
    pub dataset_id: String,
    pub plan: IntervalPlan,
    pub selection: Selection,
    pub sweep_strategy: Option<OnlineStrategy>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![format!("cannot read config {}: {e}", path.display())])?;
        serde_json::from_str(&text)
            .map_err(|e| vec![format!("invalid config {}: {e}", path.display())])
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Checks every reference before any compute; reports all problems at once.
    pub fn validate(self) -> Result<Validated, Vec<String>> {
        let mut errors = Vec::new();
        let dataset = match read_archive(&self.dataset) {
            Ok(d) => Some(d),
            Err(e) => {
                errors.push(format!("dataset {}: {e}", self.dataset.display()));
                None
            }
        };

        let selection = match self.task {
            Task::LinkPrediction => {
                let mut out = Vec::new();
                for s in &self.selectors {
                    match s.parse::<OnlineStrategy>() {
                        Ok(k) => out.push(k),
                        Err(e) => errors.push(e.to_string()),
                    }
                }
                Selection::Online(out)
            }
            _ => {
                let mut out = Vec::new();
                for s in &self.selectors {
                    match s.parse::<OfflineSelector>() {
                        Ok(k) => out.push(k),
                        Err(e) => errors.push(e.to_string()),
                    }
                }
                Selection::Offline(out)
            }
        };
        if self.selectors.is_empty() && self.sweep.is_none() {
            errors.push("no selectors given".into());
        }
        let sweep_strategy = match &self.sweep {
            Some(s) => {
                if self.task != Task::LinkPrediction {
                    errors.push("the M/B sweep needs task linkpred".into());
                }
                if s.m.iter().chain(&s.b).chain([&s.fixed]).any(|&v| v == 0) {
                    errors.push("sweep values must be at least 1".into());
                }
                match s.strategy.parse::<OnlineStrategy>() {
                    Ok(k) => Some(k),
                    Err(e) => {
                        errors.push(e.to_string());
                        None
                    }
                }
            }
            None => None,
        };
        let sel = &self.params.selector;
        if sel.min_tests == 0 || sel.top_b == 0 {
            errors.push("selector M and B must be at least 1".into());
        }
        if !(sel.alpha > 0.0 && sel.alpha <= 1.0) {
            errors.push(format!("alpha must lie in (0, 1], got {}", sel.alpha));
        }
        if !(self.params.kernel.theta > 0.0 && self.params.kernel.theta <= 1.0) {
            errors.push(format!(
                "theta must lie in (0, 1], got {}",
                self.params.kernel.theta
            ));
        }
        if self.params.katz.beta <= 0.0 {
            errors.push(format!(
                "beta must be positive, got {}",
                self.params.katz.beta
            ));
        }
        if !(0.0..=1.0).contains(&self.params.plateau) {
            errors.push(format!(
                "plateau fraction must lie in [0, 1], got {}",
                self.params.plateau
            ));
        }

        let mut plan = None;
        if let Some(d) = &dataset {
            match split_intervals(d.seq.len(), self.intervals) {
                Ok(p) => plan = Some(p),
                Err(e) => errors.push(e.to_string()),
            }
            if self.intervals < 2 {
                errors.push("at least two intervals are needed for a train/test pair".into());
            }
            match self.task {
                Task::Attribute if d.attributes.is_none() => {
                    errors.push("task attribute needs an archive with attributes".into())
                }
                Task::ChangePoint if d.change_points.is_none() => {
                    errors.push("task changepoint needs an archive with change points".into())
                }
                _ => {}
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let hash = self.hash();
        let dataset_id = self.dataset_id.clone().unwrap_or_else(|| {
            self.dataset
                .file_name()
                .map_or_else(|| "dataset".into(), |n| n.to_string_lossy().into_owned())
        });
        Ok(Validated {
            config: self,
            hash,
            dataset: dataset.unwrap(),
            dataset_id,
            plan: plan.unwrap(),
            selection,
            sweep_strategy,
        })
    }
}
