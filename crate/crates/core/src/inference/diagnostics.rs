//! Chain summaries: effective sample size, quantiles, credible intervals.

use serde::Serialize;

use crate::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Sample autocorrelation at `lag` given the mean and (biased) variance.
fn autocorr(xs: &[f64], m: f64, var: f64, lag: usize) -> f64 {
    let n = xs.len();
    let s: f64 = (0..n - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum();
    s / (n as f64 * var)
}

/// `N / (1 + 2 Σ ρ_k)`, summing autocorrelations until the first negative one.
pub fn effective_sample_size(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 10 {
        return Err(Error::data("effective sample size needs at least 10 values"));
    }
    let m = mean(series);
    let var = variance(series);
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::data("effective sample size is undefined for a constant series"));
    }
    let mut sum = 0.0;
    for lag in 1..n {
        let rho = autocorr(series, m, var, lag);
        if rho < 0.0 {
            break;
        }
        sum += rho;
    }
    Ok(n as f64 / (1.0 + 2.0 * sum))
}

/// Quantile of sorted data with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, median and a central interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Summary {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Summary with a central `level` interval, e.g. 0.95.
pub fn summarize(values: &[f64], level: f64) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::data("cannot summarise an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("sample contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let tail = (1.0 - level) / 2.0;
    Ok(Summary {
        mean: mean(values),
        sd: variance(values).sqrt(),
        median: quantile_sorted(&sorted, 0.5),
        lo: quantile_sorted(&sorted, tail),
        hi: quantile_sorted(&sorted, 1.0 - tail),
    })
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
