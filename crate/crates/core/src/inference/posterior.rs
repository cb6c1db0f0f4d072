//! The joint posterior over parameters and latent true counts.
//!
//! For a force with recorded counts `z_i` and latent true counts `x_i`,
//!
//! ```text
//! ln L = Σ_i [ ln Pr(recorded | x_i) + ln Pr(W = x_i) - ln q + ln Pr(z_i | x_i, p) ]
//! ```
//!
//! where `q` is the probability that a random event is recorded. Dividing by
//! `q` makes each `x_i` a proper draw from the recorded-event distribution.

use serde::{Deserialize, Serialize};

use super::params::{Body, BodyKind, ForceParams, ModelParams};
use super::prior::{log_prior, PriorConfig};
use crate::data::{ObservedDataset, Side};
use crate::distributions::SeverityPmf;
use crate::error_model::{normalizer_unchecked, HeapTerms, ObservationModel, ObservationVariant};
use crate::{Error, Result};

/// One force's data and model shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceModel {
    pub side: Side,
    pub body: BodyKind,
    pub variant: ObservationVariant,
    /// Recorded counts.
    pub z: Vec<u64>,
}

/// Everything the posterior depends on besides the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub forces: Vec<ForceModel>,
    pub prior: PriorConfig,
}

impl Model {
    pub fn new(forces: Vec<ForceModel>, prior: PriorConfig) -> Result<Self> {
        let m = Self { forces, prior };
        m.validate()?;
        Ok(m)
    }

    /// Model every side present in `data` with the same body and variant.
    pub fn from_dataset(
        data: &ObservedDataset,
        body: BodyKind,
        variant: ObservationVariant,
        prior: PriorConfig,
    ) -> Result<Self> {
        let forces = data
            .sides()
            .into_iter()
            .map(|side| ForceModel {
                side,
                body,
                variant,
                z: data.counts(side),
            })
            .collect();
        Self::new(forces, prior)
    }

    pub fn validate(&self) -> Result<()> {
        if self.forces.is_empty() || self.forces.len() > 2 {
            return Err(Error::config("a model covers one or two forces"));
        }
        if self.forces.len() == 2 && self.forces[0].side == self.forces[1].side {
            return Err(Error::config("the two forces must be different sides"));
        }
        for f in &self.forces {
            if f.z.is_empty() {
                return Err(Error::data(format!("no records for {}", f.side)));
            }
            if f.z.contains(&0) {
                return Err(Error::data(format!("zero count recorded for {}", f.side)));
            }
        }
        self.prior.validate()
    }

    pub fn n_obs(&self, i: usize) -> usize {
        self.forces[i].z.len()
    }

    /// Starting point: `α = 2` (or log-normal moments of `z`), rates at
    /// their prior medians, `p = 0.1`.
    pub fn default_initial(&self) -> ModelParams {
        let forces = self
            .forces
            .iter()
            .map(|f| {
                let body = match f.body {
                    BodyKind::PowerLaw => Body::PowerLaw { alpha: 2.0 },
                    BodyKind::LogNormal => {
                        let logs: Vec<f64> = f.z.iter().map(|&z| (z as f64).ln()).collect();
                        let n = logs.len() as f64;
                        let mean = logs.iter().sum::<f64>() / n;
                        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
                        let [lo, hi] = self.prior.sdlog_range;
                        let [mlo, mhi] = self.prior.meanlog_range;
                        Body::LogNormal {
                            meanlog: mean.clamp(mlo, mhi),
                            sdlog: var.sqrt().clamp(lo.max(0.5), hi),
                        }
                    }
                };
                let eta = match f.variant {
                    ObservationVariant::ExponentialQuadratic => self.prior.eta_mean_log.exp(),
                    _ => 0.0,
                };
                let lambda = match f.variant {
                    ObservationVariant::Logistic => 0.0,
                    _ => self.prior.lambda_median(f.side),
                };
                ForceParams {
                    side: f.side,
                    body,
                    obs: ObservationModel {
                        variant: f.variant,
                        lambda,
                        mu: self.prior.mu_median(f.side),
                        eta,
                    },
                    p: 0.1,
                }
            })
            .collect();
        ModelParams { forces }
    }

    /// Check that `params` and `latents` have this model's shape.
    pub fn check_state(&self, params: &ModelParams, latents: &[Vec<u64>]) -> Result<()> {
        if params.forces.len() != self.forces.len() || latents.len() != self.forces.len() {
            return Err(Error::config("state does not match the number of modelled forces"));
        }
        for ((f, p), x) in self.forces.iter().zip(&params.forces).zip(latents) {
            if p.side != f.side || p.body.kind() != f.body || p.obs.variant != f.variant {
                return Err(Error::config(format!("initial parameters for {} do not match the model", f.side)));
            }
            if x.len() != f.z.len() {
                return Err(Error::config(format!("latent count for {} must equal n_obs", f.side)));
            }
            if x.contains(&0) {
                return Err(Error::config("latent counts must be positive"));
            }
        }
        Ok(())
    }
}

/// Parameter-dependent pieces of a force's likelihood.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ForceTerms {
    pub body: super::params::BodyDist,
    pub obs: ObservationModel,
    pub ln_q: f64,
    pub ln_p: f64,
    pub ln_1mp: f64,
}

impl ForceTerms {
    /// `None` when the parameters are outside the likelihood's domain.
    pub fn new(fp: &ForceParams) -> Option<Self> {
        let body = fp.body.dist()?;
        fp.obs.validate().ok()?;
        if !(0.0..=1.0).contains(&fp.p) {
            return None;
        }
        let q = normalizer_unchecked(&body, &fp.obs);
        if !(q > 0.0) {
            return None;
        }
        Some(Self {
            body,
            obs: fp.obs,
            ln_q: q.ln(),
            ln_p: fp.p.ln(),
            ln_1mp: (-fp.p).ln_1p(),
        })
    }

    /// Battle term without the `-ln q`.
    #[inline]
    pub fn term(&self, x: u64, heap: &HeapTerms) -> f64 {
        self.obs.ln_probability_unchecked(x) + self.body.ln_pmf_unchecked(x) + heap.ln_prob(self.ln_p, self.ln_1mp)
    }

    pub fn log_likelihood(&self, x: &[u64], heap: &[HeapTerms]) -> f64 {
        let s: f64 = x.iter().zip(heap).map(|(&x, h)| self.term(x, h)).sum();
        let ll = s - x.len() as f64 * self.ln_q;
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }
}

pub(crate) fn heap_terms(z: &[u64], x: &[u64]) -> Vec<HeapTerms> {
    z.iter().zip(x).map(|(&z, &x)| HeapTerms::new(z, x)).collect()
}

/// Log likelihood of one force's latents and records.
pub fn force_log_likelihood(force: &ForceModel, params: &ForceParams, latents: &[u64]) -> f64 {
    match ForceTerms::new(params) {
        Some(t) => t.log_likelihood(latents, &heap_terms(&force.z, latents)),
        None => f64::NEG_INFINITY,
    }
}

/// Unnormalised log posterior of a full state, evaluated from scratch.
pub fn log_posterior(model: &Model, params: &ModelParams, latents: &[Vec<u64>]) -> f64 {
    let lp = log_prior(params, &model.prior);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    let mut total = lp;
    for ((f, p), x) in model.forces.iter().zip(&params.forces).zip(latents) {
        total += force_log_likelihood(f, p, x);
        if total == f64::NEG_INFINITY {
            break;
        }
    }
    total
}
