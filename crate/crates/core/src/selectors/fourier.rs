use std::collections::BTreeMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::graph::GraphSequence;

/// Relative amplitude under which the spectrum counts as flat.
const FLAT_TOLERANCE: f64 = 1e-9;

fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos())
        .collect()
}

/// Tapered spectrum of a series after removing its mean; `|x_k|` for `k` in `0..len`.
pub(crate) fn tapered_amplitudes(series: &[f64]) -> Vec<f64> {
    let len = series.len();
    let mean = series.iter().sum::<f64>() / len as f64;
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .zip(hann(len))
        .map(|(&x, h)| Complex::new((x - mean) * h, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

/// Score of every candidate period: the largest amplitude among DFT indices
/// `k` in `1..=T/2` with `round(T/k) = w`.
pub fn fourier_scores(series: &[f64]) -> Vec<(usize, f64)> {
    let len = series.len();
    if len < 2 {
        return Vec::new();
    }
    let amps = tapered_amplitudes(series);
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for (k, &amp) in amps.iter().enumerate().take(len / 2 + 1).skip(1) {
        let w = ((len as f64 / k as f64).round() as usize).max(2);
        let e = best.entry(w).or_insert(0.0);
        *e = e.max(amp);
    }
    best.into_iter().collect()
}

/// Dominant period of the edge-count series; `1` when the spectrum is flat.
pub fn fourier_select(seq: &GraphSequence) -> usize {
    let series: Vec<f64> = seq.edge_counts().into_iter().map(|c| c as f64).collect();
    select_from_series(&series)
}

pub(crate) fn select_from_series(series: &[f64]) -> usize {
    let scores = fourier_scores(series);
    let scale = series.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
    let mut best: Option<(usize, f64)> = None;
    for (w, s) in scores {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((w, s));
        }
    }
    match best {
        Some((w, s)) if s > FLAT_TOLERANCE * scale => w,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn direct_dft_amplitudes(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let taper: Vec<f64> = (0..n)
            .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
            .collect();
        (0..n)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (j, &v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * j) as f64 / n as f64;
                    re += (v - mean) * taper[j] * a.cos();
                    im += (v - mean) * taper[j] * a.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    fn oracle_select(x: &[f64]) -> usize {
        let amps = direct_dft_amplitudes(x);
        let n = x.len();
        let mut best = (1usize, 0.0f64);
        for w in 2..=n {
            let s = (1..=n / 2)
                .filter(|&k| ((n as f64 / k as f64).round() as usize).max(2) == w)
                .map(|k| amps[k])
                .fold(0.0, f64::max);
            if s > best.1 {
                best = (w, s);
            }
        }
        best.0
    }

    #[test]
    fn fft_matches_direct_dft() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64).collect();
        for (a, b) in tapered_amplitudes(&x).iter().zip(direct_dft_amplitudes(&x)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_period_eight() {
        let x: Vec<f64> = (0..64)
            .map(|i| 20.0 + 10.0 * (2.0 * PI * i as f64 / 8.0).sin())
            .collect();
        assert_eq!(oracle_select(&x), 8);
        assert_eq!(select_from_series(&x), 8);
    }

    #[test]
    fn dominant_component_wins() {
        let x: Vec<f64> = (0..64)
            .map(|i| {
                let t = i as f64;
                30.0 + 10.0 * (2.0 * PI * t / 4.0).sin() + 2.0 * (2.0 * PI * t / 16.0).sin()
            })
            .collect();
        assert_eq!(oracle_select(&x), 4);
        assert_eq!(select_from_series(&x), 4);
    }

    #[test]
    fn constant_series_falls_back() {
        assert_eq!(select_from_series(&[5.0; 40]), 1);
        assert_eq!(select_from_series(&[0.0; 9]), 1);
    }
}
