//! Frequentist power-law fitting on the tail of a sample.
//!
//! For a candidate lower bound `xmin` the scaling exponent comes from the
//! approximate discrete MLE, and the candidate with the smallest
//! Kolmogorov-Smirnov distance between model and empirical tail CDFs wins.
//! Bootstrap resampling gives the joint uncertainty of `(xmin, α)` and a
//! semi-parametric bootstrap gives a goodness-of-fit p-value.
//!
//! Bootstrap and goodness-of-fit rounds each draw from their own random
//! stream (`seed`, round index), so results do not depend on how the rounds
//! are scheduled across threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{PowerLaw, PowerLawParams, PowerLawSampler, SeverityPmf};
use crate::{Error, Result};

/// Result of a lower-bound scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsFit {
    pub xmin_hat: u64,
    pub alpha_hat: f64,
    /// The statistic `D` at the chosen candidate.
    pub ks_distance: f64,
    /// Number of observations `≥ xmin_hat`.
    pub n_tail: usize,
}

/// Outcome of one bootstrap replicate. Failures stay in place so the
/// replicate count is preserved.
pub type Replicate = std::result::Result<KsFit, String>;

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    pub replicates: Vec<Replicate>,
    pub b: usize,
}

impl BootstrapResult {
    pub fn successes(&self) -> impl Iterator<Item = &KsFit> {
        self.replicates.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.replicates.iter().filter(|r| r.is_err()).count()
    }
}

/// Approximate MLE of the exponent from observations `≥ xmin`:
/// `1 + n / Σ ln(x / (xmin - 0.5))` (discrete) or `1 + n / Σ ln(x / xmin)`
/// (continuous). Observations below `xmin` are ignored.
pub fn mle_alpha(data: &[u64], xmin: u64, discrete: bool) -> Result<f64> {
    if xmin < 1 {
        return Err(Error::domain("xmin must be at least 1"));
    }
    let shift = if discrete { xmin as f64 - 0.5 } else { xmin as f64 };
    let ln_shift = shift.ln();
    let mut n = 0usize;
    let mut sum = 0.0;
    for &x in data.iter().filter(|&&x| x >= xmin) {
        n += 1;
        sum += (x as f64).ln() - ln_shift;
    }
    if n < 2 {
        return Err(Error::data(format!("need at least 2 observations >= {xmin}, have {n}")));
    }
    if !(sum > 0.0) {
        return Err(Error::data(format!("every observation equals xmin = {xmin}; exponent is unbounded")));
    }
    Ok(1.0 + n as f64 / sum)
}

/// KS distance between the power law and the empirical CDF of the tail,
/// taken over the distinct observed values `≥ xmin`.
pub fn ks_distance(data: &[u64], params: PowerLawParams) -> Result<f64> {
    let mut tail: Vec<u64> = data.iter().copied().filter(|&x| x >= params.xmin).collect();
    if tail.is_empty() {
        return Err(Error::data(format!("no observations >= {}", params.xmin)));
    }
    tail.sort_unstable();
    let model = PowerLaw::from_params(params)?;
    Ok(ks_sorted(&tail, &model))
}

/// `tail` sorted ascending, every element in the model's support.
fn ks_sorted(tail: &[u64], model: &PowerLaw) -> f64 {
    let n = tail.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < tail.len() {
        let x = tail[i];
        let j = i + tail[i..].partition_point(|&v| v == x);
        let empirical = j as f64 / n;
        let f = 1.0 - model.survival(x);
        d = d.max((f - empirical).abs());
        i = j;
    }
    d
}

/// Scan candidate lower bounds and keep the one minimising the KS distance
/// (ties to the smallest candidate).
///
/// Default candidates are every distinct value except the two largest.
/// Candidates leaving fewer than two tail points are skipped.
pub fn estimate_xmin(data: &[u64], candidates: Option<&[u64]>) -> Result<KsFit> {
    if data.is_empty() {
        return Err(Error::data("cannot fit an empty sample"));
    }
    if data.contains(&0) {
        return Err(Error::data("observations must be positive"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_unstable();
    let mut distinct = sorted.clone();
    distinct.dedup();

    let mut cands: Vec<u64> = match candidates {
        Some(c) => c.to_vec(),
        None => distinct[..distinct.len().saturating_sub(2)].to_vec(),
    };
    cands.sort_unstable();
    cands.dedup();

    // suffix sums of ln x over the sorted sample
    let mut suffix_ln = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix_ln[i] = suffix_ln[i + 1] + (sorted[i] as f64).ln();
    }

    let mut best: Option<KsFit> = None;
    for &xmin in &cands {
        if xmin < 1 {
            continue;
        }
        let start = sorted.partition_point(|&v| v < xmin);
        let n_tail = sorted.len() - start;
        if n_tail < 2 {
            continue;
        }
        let denom = suffix_ln[start] - n_tail as f64 * (xmin as f64 - 0.5).ln();
        let alpha = 1.0 + n_tail as f64 / denom;
        let Ok(model) = PowerLaw::new(alpha, xmin) else {
            continue;
        };
        let d = ks_sorted(&sorted[start..], &model);
        if best.map_or(true, |b| d < b.ks_distance) {
            best = Some(KsFit {
                xmin_hat: xmin,
                alpha_hat: alpha,
                ks_distance: d,
                n_tail,
            });
        }
    }
    best.ok_or_else(|| Error::data("no candidate xmin leaves at least 2 tail observations"))
}

/// Indices of bootstrap replicate `replicate`: `n` uniform draws with
/// replacement from its own stream.
pub fn resample_indices(n: usize, seed: u64, replicate: u64) -> Vec<usize> {
    let mut rng = crate::rng::stream(seed, replicate);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// `b` resamples of the data with replacement, each refit with
/// [`estimate_xmin`].
pub fn bootstrap_uncertainty(data: &[u64], b: usize, seed: u64) -> Result<BootstrapResult> {
    if b < 1 {
        return Err(Error::domain("bootstrap needs at least one round"));
    }
    if data.is_empty() {
        return Err(Error::data("cannot bootstrap an empty sample"));
    }
    let replicates = (0..b)
        .into_par_iter()
        .map(|i| {
            let resample: Vec<u64> = resample_indices(data.len(), seed, i as u64)
                .into_iter()
                .map(|k| data[k])
                .collect();
            estimate_xmin(&resample, None).map_err(|e| e.to_string())
        })
        .collect();
    Ok(BootstrapResult { replicates, b })
}

/// Semi-parametric synthetic sample: below `xmin_hat` resample the observed
/// body, above it draw from the fitted power law.
pub fn synthetic_sample<R: Rng + ?Sized>(
    data: &[u64],
    fit: &KsFit,
    sampler: &PowerLawSampler,
    rng: &mut R,
) -> Vec<u64> {
    let body: Vec<u64> = data.iter().copied().filter(|&x| x < fit.xmin_hat).collect();
    let p_body = body.len() as f64 / data.len() as f64;
    (0..data.len())
        .map(|_| {
            if !body.is_empty() && rng.random::<f64>() < p_body {
                body[rng.random_range(0..body.len())]
            } else {
                sampler.sample(rng)
            }
        })
        .collect()
}

/// Goodness-of-fit p-value: fraction of `m` synthetic refits whose KS
/// distance is at least the observed one.
pub fn gof_pvalue(data: &[u64], fit: &KsFit, m: usize, seed: u64) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain("goodness-of-fit needs at least one synthetic set"));
    }
    if fit.n_tail == 0 {
        return Err(Error::data("fit has an empty tail"));
    }
    let sampler = PowerLawSampler::new(PowerLaw::new(fit.alpha_hat, fit.xmin_hat)?);
    let distances: Vec<Result<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::stream(seed, i as u64);
            let synth = synthetic_sample(data, fit, &sampler, &mut rng);
            estimate_xmin(&synth, None).map(|f| f.ks_distance)
        })
        .collect();
    let mut extreme = 0usize;
    for d in distances {
        if d? >= fit.ks_distance {
            extreme += 1;
        }
    }
    Ok(extreme as f64 / m as f64)
}
