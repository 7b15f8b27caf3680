use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::archive::Dataset;
use crate::attr::{batch_leave_out_auc, default_batch_size};
use crate::changepoint::{cp_pr_auc, graphscope_detect};
use crate::error::{HarnessError, StatsError};
use crate::linkpred::fixed_size_online_score;
use crate::selectors::OnlineStrategy;
use crate::windowing::{apply_uniform, Span};

use super::{run_online, IntervalPlan, OnlineOptions, Task, TaskParams};

/// Score of every uniform window size on every interval, for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCurves {
    pub dataset: String,
    pub task: Task,
    pub intervals: Vec<Span>,
    /// `curves[i][w - 1]`; `None` where the task could not be scored.
    pub curves: Vec<Vec<Option<f64>>>,
}

impl ScoreCurves {
    /// Largest `w` present on every interval.
    pub fn common_sizes(&self) -> usize {
        self.curves.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Long-format rows `interval,w,score` for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,interval,start,end,w,score\n");
        for (i, (span, curve)) in self.intervals.iter().zip(&self.curves).enumerate() {
            for (k, s) in curve.iter().enumerate() {
                let s = s.map_or(String::new(), |s| s.to_string());
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    self.task,
                    i + 1,
                    span.start,
                    span.end,
                    k + 1,
                    s
                ));
            }
        }
        out
    }
}

fn interval_score(
    dataset: &Dataset,
    task: Task,
    span: Span,
    w: usize,
    params: &TaskParams,
) -> Result<Option<f64>, HarnessError> {
    let seq = dataset.seq.slice(span.start, span.end);
    match task {
        Task::LinkPrediction => Ok(fixed_size_online_score(
            &seq,
            w,
            &params.katz,
            params.new_links,
        )?),
        Task::ChangePoint => {
            let truth = dataset
                .change_points
                .as_ref()
                .ok_or(HarnessError::MissingData("change points"))?
                .restrict(span.start, span.end);
            let ws = apply_uniform(&seq, w)?;
            Ok(Some(cp_pr_auc(
                &graphscope_detect(&ws).times,
                truth.times(),
                seq.len(),
            )))
        }
        Task::Attribute => {
            let attrs = dataset
                .attributes
                .as_ref()
                .ok_or(HarnessError::MissingData("vertex attributes"))?;
            let batch = params
                .batch
                .unwrap_or_else(|| default_batch_size(attrs.labelled().len()));
            let ws = apply_uniform(&seq, w)?;
            Ok(batch_leave_out_auc(&ws, attrs, batch, &params.kernel).ok())
        }
    }
}

/// Scores the task on every interval at every uniform size `1..=len(interval)`.
pub fn score_curves(
    dataset: &Dataset,
    dataset_id: &str,
    plan: &IntervalPlan,
    task: Task,
    params: &TaskParams,
) -> Result<ScoreCurves, HarnessError> {
    let cells: Vec<(usize, usize)> = plan
        .intervals
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (1..=s.len()).map(move |w| (i, w)))
        .collect();
    let scores: Vec<Result<Option<f64>, HarnessError>> = cells
        .par_iter()
        .map(|&(i, w)| interval_score(dataset, task, plan.intervals[i], w, params))
        .collect();
    let mut curves: Vec<Vec<Option<f64>>> = plan
        .intervals
        .iter()
        .map(|s| Vec::with_capacity(s.len()))
        .collect();
    for (&(i, _), s) in cells.iter().zip(scores) {
        curves[i].push(s?);
    }
    Ok(ScoreCurves {
        dataset: dataset_id.to_string(),
        task,
        intervals: plan.intervals.clone(),
        curves,
    })
}

/// Cross-task matrix: entry `(i, j)` is the mean over intervals of task `j`'s
/// score at the window size maximizing task `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTaskMatrix {
    pub tasks: Vec<Task>,
    pub entries: Vec<Vec<f64>>,
    /// `argmax[i][interval]`: best size of task `i` on each interval.
    pub argmax: Vec<Vec<usize>>,
}

impl CrossTaskMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("chosen_by");
        for t in &self.tasks {
            out.push_str(&format!(",{t}"));
        }
        out.push('\n');
        for (t, row) in self.tasks.iter().zip(&self.entries) {
            out.push_str(t.name());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// `entries[i][i] >= entries[j][i]` for every `i`, `j`.
    pub fn diagonal_dominant(&self) -> bool {
        let k = self.tasks.len();
        (0..k).all(|i| (0..k).all(|j| self.entries[i][i] >= self.entries[j][i]))
    }
}

fn check_aligned(curves: &[ScoreCurves]) -> Result<(), HarnessError> {
    let Some(first) = curves.first() else {
        return Err(HarnessError::CurveMismatch("no curves given".into()));
    };
    for c in &curves[1..] {
        if c.dataset != first.dataset {
            return Err(HarnessError::CurveMismatch(format!(
                "datasets `{}` and `{}` differ",
                first.dataset, c.dataset
            )));
        }
        if c.curves.len() != first.curves.len() {
            return Err(HarnessError::CurveMismatch(format!(
                "{} has {} intervals, {} has {}",
                first.task,
                first.curves.len(),
                c.task,
                c.curves.len()
            )));
        }
    }
    Ok(())
}

/// Builds the cross-task matrix over the window sizes common to all curves.
///
/// Unscorable cells count as 0.
pub fn table1(curves: &[ScoreCurves]) -> Result<CrossTaskMatrix, HarnessError> {
    check_aligned(curves)?;
    let sizes = curves.iter().map(ScoreCurves::common_sizes).min().unwrap();
    if sizes == 0 {
        return Err(HarnessError::CurveMismatch("no common window size".into()));
    }
    let intervals = curves[0].curves.len();
    let value = |c: &ScoreCurves, i: usize, w: usize| c.curves[i][w - 1].unwrap_or(0.0);
    let argmax: Vec<Vec<usize>> = curves
        .iter()
        .map(|c| {
            (0..intervals)
                .map(|i| {
                    let mut best = 1;
                    for w in 2..=sizes {
                        if value(c, i, w) > value(c, i, best) {
                            best = w;
                        }
                    }
                    best
                })
                .collect()
        })
        .collect();
    let entries = argmax
        .iter()
        .map(|picks| {
            curves
                .iter()
                .map(|c| {
                    picks
                        .iter()
                        .enumerate()
                        .map(|(i, &w)| value(c, i, w))
                        .sum::<f64>()
                        / intervals as f64
                })
                .collect()
        })
        .collect();
    Ok(CrossTaskMatrix {
        tasks: curves.iter().map(|c| c.task).collect(),
        entries,
        argmax,
    })
}

/// Ranks with ties replaced by their average, 1-based.
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho with a two-sided p-value from the t approximation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::TooShort(n));
    }
    let (rx, ry) = (midranks(xs), midranks(ys));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
        (2.0 * (1.0 - dist.cdf(t.abs()))).min(1.0)
    };
    Ok((rho, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanRow {
    pub a: Task,
    pub b: Task,
    pub points: usize,
    pub rho: Option<f64>,
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Spearman correlation for every pair of tasks over pooled `(interval, w)` points.
pub fn spearman_table(curves: &[ScoreCurves]) -> Result<Vec<SpearmanRow>, HarnessError> {
    check_aligned(curves)?;
    let sizes = curves.iter().map(ScoreCurves::common_sizes).min().unwrap();
    let mut rows = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for (ca, cb) in curves[i].curves.iter().zip(&curves[j].curves) {
                for w in 0..sizes {
                    if let (Some(a), Some(b)) = (ca[w], cb[w]) {
                        xs.push(a);
                        ys.push(b);
                    }
                }
            }
            let (rho, p, error) = match spearman(&xs, &ys) {
                Ok((r, p)) => (Some(r), Some(p), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            rows.push(SpearmanRow {
                a: curves[i].task,
                b: curves[j].task,
                points: xs.len(),
                rho,
                p,
                error,
            });
        }
    }
    Ok(rows)
}

/// Mean absolute change of the same window size's score between consecutive intervals.
///
/// Cells unscorable on either side are left out.
pub fn stability_diff(curves: &ScoreCurves) -> Result<f64, HarnessError> {
    if curves.curves.len() < 2 {
        return Err(HarnessError::CurveMismatch(
            "need at least two intervals".into(),
        ));
    }
    let sizes = curves.common_sizes();
    let (mut total, mut count) = (0.0, 0usize);
    for pair in curves.curves.windows(2) {
        for w in 0..sizes {
            if let (Some(a), Some(b)) = (pair[0][w], pair[1][w]) {
                total += (b - a).abs();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(HarnessError::CurveMismatch("no comparable cells".into()));
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    M,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis: SweepAxis,
    pub m: usize,
    pub b: usize,
    pub aggregate: Option<f64>,
}

/// Online link prediction over a grid: `M` varies with `B = fixed`, then
/// `B` varies with `M = fixed`.
#[allow(clippy::too_many_arguments)]
pub fn hyperparam_sweep(
    dataset: &Dataset,
    plan: &IntervalPlan,
    strategy: OnlineStrategy,
    m_values: &[usize],
    b_values: &[usize],
    fixed: usize,
    params: &TaskParams,
    seed: u64,
) -> Result<Vec<SweepCell>, HarnessError> {
    let grid: Vec<(SweepAxis, usize, usize)> = m_values
        .iter()
        .map(|&m| (SweepAxis::M, m, fixed))
        .chain(b_values.iter().map(|&b| (SweepAxis::B, fixed, b)))
        .collect();
    grid.par_iter()
        .map(|&(axis, m, b)| {
            let mut p = *params;
            p.selector.min_tests = m;
            p.selector.top_b = b;
            let r = run_online(
                dataset,
                "sweep",
                plan,
                strategy,
                &p,
                seed,
                OnlineOptions::default(),
            )?;
            Ok(SweepCell {
                axis,
                m,
                b,
                aggregate: r.aggregate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn curves(task: Task, values: Vec<Vec<f64>>) -> ScoreCurves {
        ScoreCurves {
            dataset: "d".into(),
            task,
            intervals: (0..values.len())
                .map(|i| Span {
                    start: i * 10 + 1,
                    end: i * 10 + 10,
                })
                .collect(),
            curves: values
                .into_iter()
                .map(|c| c.into_iter().map(Some).collect())
                .collect(),
        }
    }

    #[test]
    fn spearman_extremes() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(spearman(&xs, &xs).unwrap().0, 1.0);
        let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(spearman(&xs, &rev).unwrap().0, -1.0);
        assert!(matches!(
            spearman(&xs, &[1.0; 5]),
            Err(StatsError::ZeroVariance)
        ));
        assert!(matches!(
            spearman(&xs[..2], &xs[..2]),
            Err(StatsError::TooShort(2))
        ));
    }

    fn brute_rank(xs: &[f64], i: usize) -> f64 {
        let less = xs.iter().filter(|&&x| x < xs[i]).count() as f64;
        let equal = xs.iter().filter(|&&x| x == xs[i]).count() as f64;
        less + (equal + 1.0) / 2.0
    }

    #[test]
    fn spearman_matches_direct_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..50 {
            let xs: Vec<f64> = (0..20).map(|_| rng.gen_range(0..8) as f64).collect();
            let ys: Vec<f64> = (0..20).map(|_| rng.gen::<f64>()).collect();
            let rx: Vec<f64> = (0..20).map(|i| brute_rank(&xs, i)).collect();
            let ry: Vec<f64> = (0..20).map(|i| brute_rank(&ys, i)).collect();
            let mx = rx.iter().sum::<f64>() / 20.0;
            let my = ry.iter().sum::<f64>() / 20.0;
            let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
            let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
            let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
            let rho = cov / (vx * vy).sqrt();
            let (got, p) = spearman(&xs, &ys).unwrap();
            assert!((got - rho).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn spearman_p_value_reference() {
        // rho = 0.8 with n = 5: t = 0.8 * sqrt(3 / 0.36), two-sided p with 3 df is 0.1041.
        let (rho, p) = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
        assert!((p - 0.1041).abs() < 1e-3, "p = {p}");
    }

    #[test]
    fn stability_examples() {
        let a = curves(Task::ChangePoint, vec![vec![0.1, 0.5, 0.9]; 3]);
        assert_eq!(stability_diff(&a).unwrap(), 0.0);
        let b = curves(Task::ChangePoint, vec![vec![0.1, 0.5], vec![0.2, 0.6]]);
        assert!((stability_diff(&b).unwrap() - 0.1).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vals: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..7).map(|_| rng.gen()).collect())
            .collect();
        let mut total = 0.0;
        for i in 0..4 {
            for w in 0..7 {
                total += (vals[i + 1][w] - vals[i][w]).abs();
            }
        }
        let c = curves(Task::Attribute, vals);
        assert!((stability_diff(&c).unwrap() - total / 28.0).abs() < 1e-12);
    }

    #[test]
    fn table1_flat_rows_and_dominance() {
        let flat = curves(Task::ChangePoint, vec![vec![0.4; 4]; 2]);
        let peaked = curves(
            Task::LinkPrediction,
            vec![vec![0.1, 0.9, 0.3, 0.2], vec![0.5, 0.2, 0.2, 0.8]],
        );
        let m = table1(&[flat, peaked]).unwrap();
        assert_eq!(m.entries[0][0], 0.4);
        assert_eq!(m.entries[1][0], 0.4);
        assert_eq!(m.argmax[1], vec![2, 4]);
        assert!((m.entries[1][1] - 0.85).abs() < 1e-12);
        assert!((m.entries[0][1] - 0.3).abs() < 1e-12);
        assert!(m.diagonal_dominant());
    }

    #[test]
    fn mismatched_interval_counts_are_rejected() {
        let a = curves(Task::ChangePoint, vec![vec![0.4; 4]; 2]);
        let b = curves(Task::Attribute, vec![vec![0.4; 4]; 3]);
        assert!(matches!(
            table1(&[a, b]),
            Err(HarnessError::CurveMismatch(_))
        ));
    }
}
