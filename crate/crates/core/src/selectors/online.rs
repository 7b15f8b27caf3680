use serde::{Deserialize, Serialize};

/// Hyperparameters of the online selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorParams {
    /// A size is always retested until it has this many scores (`M`).
    pub min_tests: usize,
    /// The best `B` sizes by mean score are retested every step.
    pub top_b: usize,
    /// Decay of the weighted mean; `1.0` gives the plain mean.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SelectorParams {
    fn default() -> Self {
        Self {
            min_tests: 10,
            top_b: 10,
            alpha: 0.5,
            seed: 0,
        }
    }
}

impl SelectorParams {
    /// `M = B = ∞`: every size is tested at every step.
    pub fn exhaustive(alpha: f64) -> Self {
        Self {
            min_tests: usize::MAX,
            top_b: usize::MAX,
            alpha,
            seed: 0,
        }
    }
}

/// Per window size, the scores received so far tagged with the step that produced them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreLedger {
    scores: Vec<Vec<(usize, f64)>>,
}

impl ScoreLedger {
    pub fn count(&self, w: usize) -> usize {
        self.scores.get(w - 1).map_or(0, Vec::len)
    }

    pub fn scores(&self, w: usize) -> &[(usize, f64)] {
        self.scores.get(w - 1).map_or(&[], Vec::as_slice)
    }

    pub fn record(&mut self, w: usize, step: usize, score: f64) {
        debug_assert!((0.0..=1.0).contains(&score));
        if self.scores.len() < w {
            self.scores.resize_with(w, Vec::new);
        }
        self.scores[w - 1].push((step, score));
    }

    /// Mean of the scores of `w` with weight `alpha^(now - step)`; `None` if untested.
    pub fn mean(&self, w: usize, now: usize, alpha: f64) -> Option<f64> {
        let s = self.scores(w);
        if s.is_empty() {
            return None;
        }
        if alpha == 1.0 {
            return Some(s.iter().map(|x| x.1).sum::<f64>() / s.len() as f64);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &(step, score) in s {
            let weight = alpha.powi((now - step) as i32);
            num += weight * score;
            den += weight;
        }
        Some(num / den)
    }

    /// Largest window size with a list (tested or not).
    pub fn max_size(&self) -> usize {
        self.scores.len()
    }
}

/// Supplies the score of predicting step `step` from the history windowed at `w`.
///
/// `None` means the step has nothing to predict (no new links).
pub trait StepScorer {
    fn score(&mut self, step: usize, w: usize) -> Option<f64>;
}

impl<F: FnMut(usize, usize) -> Option<f64>> StepScorer for F {
    fn score(&mut self, step: usize, w: usize) -> Option<f64> {
        self(step, w)
    }
}

/// What happened when one graph arrived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub tested: Vec<usize>,
    pub appended: Vec<(usize, f64)>,
    /// Size used to window `G_1..G_step` for the next prediction.
    pub chosen: usize,
}

/// The online selection loop: at each arrival, retest under-sampled and
/// top-ranked sizes, then pick the size with the best mean.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineSelector {
    params: SelectorParams,
    ledger: ScoreLedger,
    chosen: usize,
    now: usize,
}

impl OnlineSelector {
    pub fn new(params: SelectorParams) -> Self {
        Self {
            params,
            ledger: ScoreLedger::default(),
            chosen: 1,
            now: 0,
        }
    }

    pub fn ledger(&self) -> &ScoreLedger {
        &self.ledger
    }

    pub fn chosen(&self) -> usize {
        self.chosen
    }

    pub fn params(&self) -> &SelectorParams {
        &self.params
    }

    fn mean(&self, w: usize, now: usize) -> Option<f64> {
        self.ledger.mean(w, now, self.params.alpha)
    }

    fn ranked(&self, limit: usize, now: usize) -> Vec<(usize, f64)> {
        let mut ranked: Vec<(usize, f64)> = (1..=self.ledger.max_size())
            .filter_map(|w| self.mean(w, now).map(|m| (w, m)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(limit);
        ranked
    }

    /// Sizes that would be tested when step `step` arrives.
    pub fn candidates(&self, step: usize) -> Vec<usize> {
        let mut tested: Vec<usize> = (1..step)
            .filter(|&w| self.ledger.count(w) < self.params.min_tests)
            .collect();
        tested.extend(
            self.ranked(self.params.top_b, step)
                .into_iter()
                .map(|(w, _)| w),
        );
        tested.sort_unstable();
        tested.dedup();
        tested
    }

    /// Processes the arrival of graph `step` (1-based, consecutive).
    pub fn observe(&mut self, step: usize, scorer: &mut dyn StepScorer) -> StepRecord {
        let tested = self.candidates(step);
        let mut appended = Vec::new();
        for &w in &tested {
            if let Some(s) = scorer.score(step, w) {
                self.ledger.record(w, step, s);
                appended.push((w, s));
            }
        }
        self.now = step;
        self.chosen = self.ranked(1, step).first().map_or(1, |&(w, _)| w);
        StepRecord {
            step,
            tested,
            appended,
            chosen: self.chosen,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_step_tests_and_picks_one() {
        let mut sel = OnlineSelector::new(SelectorParams::default());
        let r1 = sel.observe(1, &mut |_, _| Some(0.5));
        assert!(r1.tested.is_empty());
        assert_eq!(r1.chosen, 1);
        let r2 = sel.observe(2, &mut |_, _| Some(0.5));
        assert_eq!(r2.tested, vec![1]);
        assert_eq!(r2.chosen, 1);
    }

    #[test]
    fn unit_alpha_is_plain_mean() {
        let mut l = ScoreLedger::default();
        for (i, s) in [0.2, 0.9, 0.4].into_iter().enumerate() {
            l.record(3, i + 2, s);
        }
        let plain = (0.2 + 0.9 + 0.4) / 3.0;
        assert_eq!(l.mean(3, 10, 1.0), Some(plain));
        let weighted = l.mean(3, 4, 0.5).unwrap();
        let expected = (0.25 * 0.2 + 0.5 * 0.9 + 0.4) / 1.75;
        assert!((weighted - expected).abs() < 1e-15);
        assert_eq!(l.mean(1, 4, 0.5), None);
    }

    #[test]
    fn skipped_steps_append_nothing() {
        let mut sel = OnlineSelector::new(SelectorParams::default());
        sel.observe(1, &mut |_, _| None);
        let r = sel.observe(2, &mut |_, _| None);
        assert_eq!(r.tested, vec![1]);
        assert!(r.appended.is_empty());
        assert_eq!(sel.ledger().count(1), 0);
        let r = sel.observe(3, &mut |_, w| Some(if w == 2 { 0.9 } else { 0.1 }));
        assert_eq!(r.tested, vec![1, 2]);
        assert_eq!(r.chosen, 2);
    }

    #[test]
    fn argmax_ties_prefer_smaller_sizes() {
        let mut sel = OnlineSelector::new(SelectorParams::default());
        for step in 1..=5 {
            sel.observe(step, &mut |_, _| Some(0.3));
        }
        assert_eq!(sel.chosen(), 1);
    }

    #[test]
    fn small_m_and_b_limit_the_tested_set() {
        let params = SelectorParams {
            min_tests: 1,
            top_b: 1,
            alpha: 1.0,
            seed: 0,
        };
        let mut sel = OnlineSelector::new(params);
        for step in 1..=12 {
            let r = sel.observe(step, &mut |s, w| Some(((s * 7 + w * 3) % 11) as f64 / 10.0));
            if step >= 3 {
                assert!(r.tested.len() <= 2, "step {step}: {:?}", r.tested);
            }
        }
    }
}
