use serde::{Deserialize, Serialize};

use crate::graph::{GraphSequence, StaticGraph};

/// Convergence rule for the growing-window exponent estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdageParams {
    /// Relative change regarded as stable.
    pub epsilon: f64,
    /// Consecutive stable increments required.
    pub consecutive: usize,
}

impl Default for AdageParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            consecutive: 3,
        }
    }
}

const GAMMA_MIN: f64 = 1.0001;
const GAMMA_MAX: f64 = 20.0;

/// B_2, B_4, ..., B_12.
const BERNOULLI: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// Riemann zeta for real `s > 1` by Euler-Maclaurin summation.
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    const N: usize = 10;
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // Term j: B_2j / (2j)! * s (s+1) ... (s+2j-2) * N^(-s-2j+1).
    let mut rising = s;
    let mut factorial = 2.0;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let order = 2 * j + 1;
        sum += b / factorial * rising * n.powf(-s - order as f64);
        rising *= (s + order as f64) * (s + order as f64 + 1.0);
        factorial *= ((order + 2) * (order + 3)) as f64;
    }
    sum
}

/// Discrete power-law exponent by maximum likelihood with `x_min = 1`.
///
/// Zeros are ignored; `None` if no positive value remains.
pub fn power_law_mle(values: &[usize]) -> Option<f64> {
    let logs: Vec<f64> = values
        .iter()
        .filter(|&&x| x > 0)
        .map(|&x| (x as f64).ln())
        .collect();
    if logs.is_empty() {
        return None;
    }
    let count = logs.len() as f64;
    let log_sum: f64 = logs.iter().sum();
    let nll = |g: f64| g * log_sum + count * riemann_zeta(g).ln();
    Some(golden_section_min(nll, GAMMA_MIN, GAMMA_MAX, 1e-10))
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Exponent of the union of `G_1..G_w` for every `w`; `None` where all degrees are zero.
pub fn adage_curve(seq: &GraphSequence) -> Vec<(usize, Option<f64>)> {
    let mut union = StaticGraph::empty(seq.n());
    seq.graphs()
        .iter()
        .enumerate()
        .map(|(i, g)| {
            union.union_with(g);
            (i + 1, power_law_mle(&union.degrees()))
        })
        .collect()
}

/// Smallest `w` ending a run of `consecutive` stable increments; `T` if none.
pub fn adage_select(seq: &GraphSequence, params: &AdageParams) -> usize {
    select_from_curve(&adage_curve(seq), params).unwrap_or(seq.len())
}

pub(crate) fn select_from_curve(
    curve: &[(usize, Option<f64>)],
    params: &AdageParams,
) -> Option<usize> {
    let mut run = 0;
    for pair in curve.windows(2) {
        match (pair[0].1, pair[1].1) {
            (Some(prev), Some(cur)) if ((cur - prev) / prev).abs() < params.epsilon => {
                run += 1;
                if run >= params.consecutive {
                    return Some(pair[1].0);
                }
            }
            _ => run = 0,
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn zeta_known_values() {
        assert!((riemann_zeta(2.0) - PI * PI / 6.0).abs() < 1e-12);
        assert!((riemann_zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((riemann_zeta(3.0) - 1.202_056_903_159_594_3).abs() < 1e-12);
        // Near the pole zeta(s) ~ 1/(s-1) + Euler-Mascheroni.
        let s = 1.0001;
        assert!((riemann_zeta(s) - (1.0 / (s - 1.0) + 0.577_215_664_9)).abs() < 1e-3);
    }

    fn oracle_zeta(s: f64) -> f64 {
        let k = 2000;
        let head: f64 = (1..=k).map(|i| (i as f64).powf(-s)).sum();
        head + (k as f64 + 0.5).powf(1.0 - s) / (s - 1.0)
    }

    #[test]
    fn mle_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let degrees: Vec<usize> = (0..3000)
            .map(|_| {
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                (u.powf(-1.0 / 1.5)).floor() as usize
            })
            .collect();
        let logs: f64 = degrees.iter().map(|&d| (d as f64).ln()).sum();
        let n = degrees.len() as f64;
        let mut best = (0.0, f64::INFINITY);
        for i in 0..=3000 {
            let g = 1.5 + i as f64 * 1e-3;
            let nll = g * logs + n * oracle_zeta(g).ln();
            if nll < best.1 {
                best = (g, nll);
            }
        }
        let got = power_law_mle(&degrees).unwrap();
        assert!((got - best.0).abs() <= 1e-3, "mle {got} grid {}", best.0);
    }

    #[test]
    fn all_zero_degrees_are_degenerate() {
        assert_eq!(power_law_mle(&[0, 0, 0]), None);
        assert_eq!(power_law_mle(&[]), None);
    }

    #[test]
    fn stabilized_union_converges() {
        let n = 40;
        let mut graphs = Vec::new();
        for t in 0..5 {
            let center = t * 8;
            graphs.push(StaticGraph::from_edges(
                n,
                (1..=t + 2).map(|k| (center, center + k)),
            ));
        }
        graphs.extend(vec![StaticGraph::empty(n); 7]);
        let seq = GraphSequence::new(n, graphs, 1);
        let w = adage_select(&seq, &AdageParams::default());
        assert!(w <= 8, "selected {w}");
    }

    #[test]
    fn fresh_growing_stars_never_converge() {
        let mut graphs = Vec::new();
        let n = 300;
        let mut next = 0;
        for t in 0..8 {
            let center = next;
            let leaves = 1usize << t;
            graphs.push(StaticGraph::from_edges(
                n,
                (1..=leaves).map(|k| (center, center + k)),
            ));
            next += leaves + 1;
        }
        let seq = GraphSequence::new(n, graphs, 1);
        let curve = adage_curve(&seq);
        for p in curve.windows(2) {
            let (a, b) = (p[0].1.unwrap(), p[1].1.unwrap());
            assert!(((b - a) / a).abs() >= 0.01, "{a} -> {b}");
        }
        assert_eq!(adage_select(&seq, &AdageParams::default()), 8);
    }

    #[test]
    fn skipped_sizes_reset_the_run() {
        let p = AdageParams::default();
        let c = [
            (1, Some(2.0)),
            (2, Some(2.0)),
            (3, None),
            (4, Some(2.0)),
            (5, Some(2.0)),
            (6, Some(2.0)),
        ];
        assert_eq!(select_from_curve(&c, &p), None);
        let c = [
            (1, Some(2.0)),
            (2, Some(2.0)),
            (3, Some(2.0)),
            (4, Some(2.0)),
        ];
        assert_eq!(select_from_curve(&c, &p), Some(4));
    }
}
