//! Windowing algorithms: supervised offline and online selection plus the
//! unsupervised and trivial baselines.
//!
//! Every argmax in this module breaks ties toward the smaller window size.

mod adage;
mod entropy;
mod fourier;
mod jaccard;
mod online;
mod oracles;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{TaskError, WindowError};
use crate::graph::GraphSequence;
use crate::windowing::Windowing;

pub use adage::{adage_curve, adage_select, power_law_mle, riemann_zeta, AdageParams};
pub use entropy::{entropy_select, layer_quality, von_neumann_entropy};
pub use fourier::{fourier_scores, fourier_select};
pub use jaccard::{jaccard, jaccard_curve, jaccard_select, DEFAULT_PLATEAU_FRACTION};
pub use online::{OnlineSelector, ScoreLedger, SelectorParams, StepRecord, StepScorer};
pub use oracles::{AttributeOracle, ChangePointOracle, LinkPredictionOracle};

/// Scores a uniform window size on training data with its ground truth.
pub trait TaskOracle: Sync {
    fn score(&self, train: &GraphSequence, w: usize) -> Result<f64, TaskError>;
}

impl<F> TaskOracle for F
where
    F: Fn(&GraphSequence, usize) -> Result<f64, TaskError> + Sync,
{
    fn score(&self, train: &GraphSequence, w: usize) -> Result<f64, TaskError> {
        self(train, w)
    }
}

/// Result of the offline sweep over every window size of the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineSelection {
    pub window: usize,
    /// `(w, score)` for every `w` in `1..=T`; failed evaluations hold the error text.
    pub scores: Vec<(usize, Result<f64, String>)>,
}

/// Tries every uniform window size on `train`, keeping the best score.
pub fn supervised_offline_select(
    train: &GraphSequence,
    oracle: &dyn TaskOracle,
) -> OfflineSelection {
    let scores: Vec<(usize, Result<f64, String>)> = (1..=train.len())
        .into_par_iter()
        .map(|w| (w, oracle.score(train, w).map_err(|e| e.to_string())))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (w, s) in &scores {
        if let Ok(s) = s {
            if best.is_none_or(|(_, b)| *s > b) {
                best = Some((*w, *s));
            }
        }
    }
    OfflineSelection {
        window: best.map_or(1, |(w, _)| w),
        scores,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedMode {
    /// The initial resolution, `w = 1`.
    HandPicked,
    /// One window over the whole sequence.
    NoTime,
}

pub fn fixed_select(mode: FixedMode, len: usize) -> usize {
    match mode {
        FixedMode::HandPicked => 1,
        FixedMode::NoTime => len,
    }
}

/// Segments drawn left to right, each uniform on `[1, remaining]`.
pub fn random_windowing<R: Rng + ?Sized>(
    len: usize,
    rng: &mut R,
) -> Result<Windowing, WindowError> {
    if len == 0 {
        return Err(WindowError::Empty);
    }
    let mut lengths = Vec::new();
    let mut remaining = len;
    while remaining > 0 {
        let l = rng.gen_range(1..=remaining);
        lengths.push(l);
        remaining -= l;
    }
    Windowing::from_lengths(&lengths)
}

pub fn random_windowing_seeded(len: usize, seed: u64) -> Result<Windowing, WindowError> {
    random_windowing(len, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Offline windowing algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OfflineSelector {
    HandPicked,
    NoTime,
    Random,
    Supervised,
    Fourier,
    Jaccard,
    Entropy,
    Adage,
}

impl OfflineSelector {
    pub const ALL: [OfflineSelector; 8] = [
        Self::HandPicked,
        Self::NoTime,
        Self::Random,
        Self::Supervised,
        Self::Fourier,
        Self::Jaccard,
        Self::Entropy,
        Self::Adage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::HandPicked => "hand-picked",
            Self::NoTime => "no-time",
            Self::Random => "random",
            Self::Supervised => "supervised",
            Self::Fourier => "fourier",
            Self::Jaccard => "jaccard",
            Self::Entropy => "entropy",
            Self::Adage => "adage",
        }
    }
}

/// Online windowing algorithms for link prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnlineStrategy {
    /// Algorithm 1 with the unweighted mean.
    Algorithm1,
    /// Algorithm 1 with exponentially weighted means.
    WeightedAlgorithm1,
    /// Algorithm 1 ledger frozen at the end of training.
    TrainingOnly,
    HandPicked,
    Random,
    Adage,
}

impl OnlineStrategy {
    pub const ALL: [OnlineStrategy; 6] = [
        Self::Algorithm1,
        Self::WeightedAlgorithm1,
        Self::TrainingOnly,
        Self::HandPicked,
        Self::Random,
        Self::Adage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Algorithm1 => "algorithm1",
            Self::WeightedAlgorithm1 => "weighted-algorithm1",
            Self::TrainingOnly => "training-only",
            Self::HandPicked => "hand-picked",
            Self::Random => "random",
            Self::Adage => "adage",
        }
    }
}

/// Error for an unrecognised selector name; lists the valid ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSelector {
    pub name: String,
    pub valid: Vec<&'static str>,
}

impl fmt::Display for UnknownSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown selector `{}` (valid: {})",
            self.name,
            self.valid.join(", ")
        )
    }
}

impl std::error::Error for UnknownSelector {}

impl FromStr for OfflineSelector {
    type Err = UnknownSelector;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownSelector {
                name: s.to_string(),
                valid: Self::ALL.iter().map(|k| k.name()).collect(),
            })
    }
}

impl FromStr for OnlineStrategy {
    type Err = UnknownSelector;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownSelector {
                name: s.to_string(),
                valid: Self::ALL.iter().map(|k| k.name()).collect(),
            })
    }
}

impl fmt::Display for OfflineSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for OnlineStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StaticGraph;

    fn seq(len: usize) -> GraphSequence {
        GraphSequence::new(2, vec![StaticGraph::empty(2); len], 1)
    }

    #[test]
    fn offline_argmax_and_ties() {
        let peak = |_: &GraphSequence, w: usize| Ok(-((w as f64) - 7.0).abs());
        assert_eq!(supervised_offline_select(&seq(12), &peak).window, 7);
        let tie = |_: &GraphSequence, w: usize| Ok(if w == 3 || w == 5 { 1.0 } else { 0.0 });
        assert_eq!(supervised_offline_select(&seq(8), &tie).window, 3);
        let any = |_: &GraphSequence, _: usize| Ok(0.2);
        assert_eq!(supervised_offline_select(&seq(1), &any).window, 1);
    }

    #[test]
    fn offline_skips_failing_sizes() {
        let flaky = |_: &GraphSequence, w: usize| {
            if w == 2 {
                Err(TaskError::NothingToScore)
            } else {
                Ok(w as f64 / 10.0)
            }
        };
        let sel = supervised_offline_select(&seq(3), &flaky);
        assert_eq!(sel.window, 3);
        assert!(sel.scores[1].1.is_err());
    }

    #[test]
    fn fixed_modes() {
        assert_eq!(fixed_select(FixedMode::HandPicked, 17), 1);
        assert_eq!(fixed_select(FixedMode::NoTime, 40), 40);
        assert_eq!(fixed_select(FixedMode::NoTime, 1), 1);
    }

    #[test]
    fn random_windowing_is_seeded_and_covers() {
        assert_eq!(random_windowing_seeded(1, 9).unwrap().window_count(), 1);
        let a = random_windowing_seeded(50, 42).unwrap();
        assert_eq!(a, random_windowing_seeded(50, 42).unwrap());
        assert_eq!(a.lengths().iter().sum::<usize>(), 50);
    }

    #[test]
    fn random_first_segment_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let total: usize = (0..draws)
            .map(|_| random_windowing(10, &mut rng).unwrap().lengths()[0])
            .sum();
        let mean = total as f64 / draws as f64;
        // Uniform on 1..=10: mean 5.5, variance 8.25.
        let sigma = (8.25f64 / draws as f64).sqrt();
        assert!((mean - 5.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn names_round_trip_and_unknown_lists_valid() {
        for k in OfflineSelector::ALL {
            assert_eq!(k.name().parse::<OfflineSelector>().unwrap(), k);
        }
        for k in OnlineStrategy::ALL {
            assert_eq!(k.name().parse::<OnlineStrategy>().unwrap(), k);
        }
        let err = "bogus".parse::<OfflineSelector>().unwrap_err();
        assert!(err.to_string().contains("fourier"));
    }
}
