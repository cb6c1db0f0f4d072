//! Predictions from posterior draws: the true number of events, total
//! severity including unrecorded events, and the size above which events
//! are almost surely recorded.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{ObservedDataset, Side};
use crate::distributions::{PowerLaw, SeverityPmf};
use crate::error_model::{ObservationModel, NORMALISER_CAP, NORMALISER_TOL};
use crate::inference::diagnostics::{summarize, Summary};
use crate::inference::Draw;
use crate::{Error, Result};

/// Probability that a power-law event with `xmin = 1` is recorded.
pub fn observation_normalizer(alpha: f64, model: &ObservationModel) -> Result<f64> {
    crate::error_model::observation_normalizer(&PowerLaw::new(alpha, 1)?, model)
}

/// Draw `n_true` given `n_obs` recorded events, each recorded with
/// probability `q`: `n_true - n_obs` is negative binomial with `n_obs`
/// successes and success probability `q`.
pub fn sample_n_true<R: Rng + ?Sized>(n_obs: u64, q: f64, rng: &mut R) -> Result<u64> {
    if n_obs < 1 {
        return Err(Error::domain("n_obs must be at least 1"));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!("recording probability must lie in (0, 1], got {q}")));
    }
    if q == 1.0 {
        return Ok(n_obs);
    }
    // gamma-Poisson mixture
    let gamma = Gamma::new(n_obs as f64, (1.0 - q) / q).map_err(|e| Error::Numerical(e.to_string()))?;
    let rate: f64 = gamma.sample(rng);
    if !(rate > 0.0) {
        return Ok(n_obs);
    }
    let extra: f64 = Poisson::new(rate)
        .map_err(|e| Error::Numerical(e.to_string()))?
        .sample(rng);
    Ok(n_obs + extra as u64)
}

/// Inverse-transform sampler for the size of an unrecorded event:
/// `Pr(W = w | missed) ∝ Pr(W = w) · Pr(missed | w)`.
#[derive(Debug, Clone)]
pub struct MissingSampler {
    start: u64,
    /// Unnormalised cumulative mass from `start`.
    cum: Vec<f64>,
}

impl MissingSampler {
    pub fn new<B: SeverityPmf + ?Sized>(body: &B, model: &ObservationModel) -> Result<Self> {
        let start = body.support_min();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        let mut w = start;
        loop {
            acc += body.ln_pmf_unchecked(w).exp() * model.miss_probability_unchecked(w);
            cum.push(acc);
            let bound = model.miss_probability_unchecked(w + 1) * body.survival(w);
            if (acc > 0.0 && bound < NORMALISER_TOL * acc) || bound == 0.0 {
                break;
            }
            if w >= NORMALISER_CAP {
                if bound > 1e-6 * acc {
                    log::warn!("unrecorded-size table truncated at {w} with tail mass {bound:.3e}");
                }
                // the rest of the tail sits on the cap
                acc += bound;
                *cum.last_mut().expect("nonempty") = acc;
                break;
            }
            w += 1;
        }
        if !(acc > 0.0) {
            return Err(Error::domain("every event is recorded; there is nothing to sample"));
        }
        Ok(Self { start, cum })
    }

    /// `Pr(W = w | missed)`.
    pub fn pmf(&self, w: u64) -> f64 {
        if w < self.start {
            return 0.0;
        }
        let i = (w - self.start) as usize;
        if i >= self.cum.len() {
            return 0.0;
        }
        let prev = if i == 0 { 0.0 } else { self.cum[i - 1] };
        (self.cum[i] - prev) / self.total()
    }

    fn total(&self) -> f64 {
        *self.cum.last().expect("nonempty")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.sample(Open01);
        let target = u * self.total();
        let i = self.cum.partition_point(|&c| c < target).min(self.cum.len() - 1);
        self.start + i as u64
    }
}

/// `count` sizes of unrecorded events under a power-law body.
pub fn sample_missing_battles<R: Rng + ?Sized>(
    count: u64,
    alpha: f64,
    model: &ObservationModel,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let sampler = MissingSampler::new(&PowerLaw::new(alpha, 1)?, model)?;
    Ok((0..count).map(|_| sampler.sample(rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForcePrediction {
    pub side: Side,
    pub n_obs: u64,
    pub n_true: u64,
    pub q: f64,
    /// `Σ x_i` over recorded events in this draw.
    pub latent_sum: u64,
    /// Summed sizes of the simulated unrecorded events.
    pub missing_sum: u64,
    pub total_true: u64,
    pub total_observed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraw {
    pub iteration: usize,
    pub forces: Vec<ForcePrediction>,
}

impl PredictiveDraw {
    pub fn force(&self, side: Side) -> Option<&ForcePrediction> {
        self.forces.iter().find(|f| f.side == side)
    }
}

fn predict_one(draw: &Draw, data: &ObservedDataset, seed: u64, index: u64) -> Result<PredictiveDraw> {
    let mut rng = crate::rng::stream(seed, index);
    let mut forces = Vec::with_capacity(draw.params.forces.len());
    for (k, fp) in draw.params.forces.iter().enumerate() {
        let z = data.counts(fp.side);
        if z.is_empty() {
            return Err(Error::data(format!("draws model {} but the data has no such records", fp.side)));
        }
        let n_obs = z.len() as u64;
        let body = fp
            .body
            .dist()
            .ok_or_else(|| Error::domain(format!("draw at iteration {} has invalid body parameters", draw.iteration)))?;
        let q = crate::error_model::observation_normalizer(&body, &fp.obs)?;
        let n_true = sample_n_true(n_obs, q, &mut rng)?;
        let missing = n_true - n_obs;
        let missing_sum: u64 = if missing > 0 {
            let sampler = MissingSampler::new(&body, &fp.obs)?;
            (0..missing).map(|_| sampler.sample(&mut rng)).sum()
        } else {
            0
        };
        let latent_sum = draw.latent_sums[k];
        forces.push(ForcePrediction {
            side: fp.side,
            n_obs,
            n_true,
            q,
            latent_sum,
            missing_sum,
            total_true: latent_sum + missing_sum,
            total_observed: z.iter().sum(),
        });
    }
    Ok(PredictiveDraw {
        iteration: draw.iteration,
        forces,
    })
}

/// One prediction per posterior draw, each with its own parameters and
/// seed stream. The result does not depend on thread scheduling.
pub fn predictive_totals(draws: &[Draw], data: &ObservedDataset, seed: u64) -> Result<Vec<PredictiveDraw>> {
    if draws.is_empty() {
        return Err(Error::data("no posterior draws to predict from"));
    }
    draws
        .par_iter()
        .enumerate()
        .map(|(i, d)| predict_one(d, data, seed, i as u64))
        .collect()
}

/// Summary of one predicted quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantitySummary {
    pub quantity: String,
    pub side: Side,
    pub summary: Summary,
}

/// `n_true` and `total_true` summaries per side, with central `level` intervals.
pub fn summarize_predictions(preds: &[PredictiveDraw], level: f64) -> Result<Vec<QuantitySummary>> {
    let first = preds.first().ok_or_else(|| Error::data("no predictions to summarise"))?;
    let mut out = Vec::new();
    for (k, f) in first.forces.iter().enumerate() {
        let n_true: Vec<f64> = preds.iter().map(|p| p.forces[k].n_true as f64).collect();
        let total: Vec<f64> = preds.iter().map(|p| p.forces[k].total_true as f64).collect();
        out.push(QuantitySummary {
            quantity: "n_true".into(),
            side: f.side,
            summary: summarize(&n_true, level)?,
        });
        out.push(QuantitySummary {
            quantity: "total_true".into(),
            side: f.side,
            summary: summarize(&total, level)?,
        });
    }
    Ok(out)
}

pub fn write_predictions<W: Write>(preds: &[PredictiveDraw], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(first) = preds.first() {
        let mut h = vec!["iteration".to_string()];
        for f in &first.forces {
            let t = f.side.tag();
            h.extend([
                format!("q_{t}"),
                format!("n_true_{t}"),
                format!("latent_sum_{t}"),
                format!("missing_sum_{t}"),
                format!("total_true_{t}"),
                format!("total_observed_{t}"),
            ]);
        }
        w.write_record(&h)?;
    }
    for p in preds {
        let mut row = vec![p.iteration.to_string()];
        for f in &p.forces {
            row.extend([
                f.q.to_string(),
                f.n_true.to_string(),
                f.latent_sum.to_string(),
                f.missing_sum.to_string(),
                f.total_true.to_string(),
                f.total_observed.to_string(),
            ]);
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<predictions>", e))?;
    Ok(())
}

pub fn write_summaries<W: Write>(rows: &[QuantitySummary], level: f64, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["quantity", "side", "mean", "sd", "median", "lo", "hi", "level"])?;
    for r in rows {
        let s = r.summary;
        w.write_record([
            r.quantity.clone(),
            r.side.to_string(),
            s.mean.to_string(),
            s.sd.to_string(),
            s.median.to_string(),
            s.lo.to_string(),
            s.hi.to_string(),
            level.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

/// Upper limit searched by [`x_threshold`].
pub const THRESHOLD_CAP: u64 = 1_000_000;

/// Smallest `x` whose recording probability, averaged over `models`,
/// exceeds `level`. The models need not pass validation, so `μ = 0` works.
pub fn x_threshold_from_models(models: &[ObservationModel], level: f64, cap: u64) -> Result<u64> {
    if models.is_empty() {
        return Err(Error::data("no posterior draws for the threshold"));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::domain(format!("threshold level must lie in [0, 1), got {level}")));
    }
    let mean_prob = |x: u64| models.iter().map(|m| m.probability_unchecked(x)).sum::<f64>() / models.len() as f64;
    if mean_prob(1) > level {
        return Ok(1);
    }
    if !(mean_prob(cap) > level) {
        return Err(Error::Numerical(format!(
            "mean recording probability stays at or below {level} up to x = {cap}"
        )));
    }
    // invariant: mean_prob(lo) <= level < mean_prob(hi)
    let (mut lo, mut hi) = (1u64, cap);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if mean_prob(mid) > level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// [`x_threshold_from_models`] over the draws of one side.
pub fn x_threshold(draws: &[Draw], side: Side, level: f64) -> Result<u64> {
    let models: Vec<ObservationModel> = draws
        .iter()
        .filter_map(|d| d.params.force(side).map(|f| f.obs))
        .collect();
    x_threshold_from_models(&models, level, THRESHOLD_CAP)
}
