use crate::graph::{GraphSequence, StaticGraph};
use crate::windowing::apply_uniform;

/// Plateau threshold as a fraction of the total rise of the mean-J curve.
pub const DEFAULT_PLATEAU_FRACTION: f64 = 0.05;

/// Jaccard index of two edge sets; two empty graphs count as identical.
pub fn jaccard(a: &StaticGraph, b: &StaticGraph) -> f64 {
    let inter = a.edges().filter(|&(u, v)| b.contains(u, v)).count();
    let union = a.edge_count() + b.edge_count() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Mean Jaccard index of consecutive windows for every `w` giving at least two windows.
pub fn jaccard_curve(seq: &GraphSequence) -> Vec<(usize, f64)> {
    (1..=seq.len())
        .filter_map(|w| {
            let ws = apply_uniform(seq, w).ok()?;
            let g = ws.graphs();
            if g.len() < 2 {
                return None;
            }
            let total: f64 = g.windows(2).map(|p| jaccard(&p[0], &p[1])).sum();
            Some((w, total / (g.len() - 1) as f64))
        })
        .collect()
}

/// Smallest window size at which the mean-J curve has levelled off.
pub fn jaccard_select(seq: &GraphSequence, tau: f64) -> usize {
    plateau(&jaccard_curve(seq), tau)
}

pub(crate) fn plateau(curve: &[(usize, f64)], tau: f64) -> usize {
    let Some(&(first_w, first)) = curve.first() else {
        return 1;
    };
    let max = curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let rise = max - first;
    if rise <= 0.0 {
        return first_w;
    }
    for pair in curve.windows(2) {
        if pair[1].1 - pair[0].1 < tau * rise {
            return pair[0].0;
        }
    }
    curve.last().unwrap().0
}
