//! Prior distribution over [`ModelParams`].
//!
//! `(λ_U, λ_N)` and, independently, `(μ_U, μ_N)` are bivariate log-normal;
//! this correlation is the only link between the two forces. When a run
//! models a single force its rates get the matching univariate marginal.
//! `α`, `p` and the log-normal body parameters are uniform on intervals;
//! `η` is an independent log-normal.

use serde::{Deserialize, Serialize};

use super::params::{Body, ModelParams};
use crate::distributions::{lognormal_ln_density, BivariateLogNormal};
use crate::error_model::ObservationVariant;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub lambda: BivariateLogNormal,
    pub mu: BivariateLogNormal,
    pub alpha_range: [f64; 2],
    pub eta_mean_log: f64,
    pub eta_var_log: f64,
    pub meanlog_range: [f64; 2],
    pub sdlog_range: [f64; 2],
}

impl Default for PriorConfig {
    fn default() -> Self {
        let rates = BivariateLogNormal {
            mean_log: [0.0, -3.0],
            cov_log: [[1.0, 0.6], [0.6, 2.0]],
        };
        Self {
            lambda: rates,
            mu: rates,
            alpha_range: [1.5, 3.0],
            eta_mean_log: -7.0,
            eta_var_log: 4.0,
            meanlog_range: [-2.0, 8.0],
            sdlog_range: [0.05, 5.0],
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        self.lambda.validate().map_err(|e| Error::config(format!("lambda prior: {e}")))?;
        self.mu.validate().map_err(|e| Error::config(format!("mu prior: {e}")))?;
        for (name, r) in [
            ("alpha", self.alpha_range),
            ("meanlog", self.meanlog_range),
            ("sdlog", self.sdlog_range),
        ] {
            if !(r[0] < r[1]) || !r[0].is_finite() || !r[1].is_finite() {
                return Err(Error::config(format!("{name} prior range must be a finite interval")));
            }
        }
        if self.alpha_range[0] <= 1.0 {
            return Err(Error::config("alpha prior must exclude alpha <= 1"));
        }
        if self.sdlog_range[0] <= 0.0 {
            return Err(Error::config("sdlog prior must exclude sdlog <= 0"));
        }
        if !(self.eta_var_log > 0.0) || !self.eta_mean_log.is_finite() {
            return Err(Error::config("eta prior needs a finite mean and positive variance"));
        }
        Ok(())
    }

    /// Prior median of `λ` for a side.
    pub fn lambda_median(&self, side: crate::data::Side) -> f64 {
        self.lambda.mean_log[side.index()].exp()
    }

    pub fn mu_median(&self, side: crate::data::Side) -> f64 {
        self.mu.mean_log[side.index()].exp()
    }
}

fn inside(v: f64, r: [f64; 2]) -> bool {
    v >= r[0] && v <= r[1]
}

/// Joint or marginal log-normal density for a set of per-side rates.
fn rate_density(prior: &BivariateLogNormal, rates: &[(usize, f64)]) -> f64 {
    match rates {
        [] => 0.0,
        [(i, v)] => {
            let (m, s2) = prior.marginal(*i);
            lognormal_ln_density(*v, m, s2)
        }
        [(i, a), (_, b)] => {
            if !(*a > 0.0 && *b > 0.0) {
                return f64::NEG_INFINITY;
            }
            let pair = if *i == 0 { [*a, *b] } else { [*b, *a] };
            prior.ln_density_unchecked(pair)
        }
        _ => unreachable!("at most two forces"),
    }
}

/// Log prior density; `-inf` outside the support.
pub fn log_prior(params: &ModelParams, prior: &PriorConfig) -> f64 {
    let mut total = 0.0;
    let mut lambdas = Vec::with_capacity(2);
    let mut mus = Vec::with_capacity(2);
    for f in &params.forces {
        match f.body {
            Body::PowerLaw { alpha } => {
                if !inside(alpha, prior.alpha_range) {
                    return f64::NEG_INFINITY;
                }
            }
            Body::LogNormal { meanlog, sdlog } => {
                if !inside(meanlog, prior.meanlog_range) || !inside(sdlog, prior.sdlog_range) {
                    return f64::NEG_INFINITY;
                }
            }
        }
        if !(0.0..=1.0).contains(&f.p) {
            return f64::NEG_INFINITY;
        }
        if f.obs.variant != ObservationVariant::Logistic {
            lambdas.push((f.side.index(), f.obs.lambda));
        }
        mus.push((f.side.index(), f.obs.mu));
        if f.obs.variant == ObservationVariant::ExponentialQuadratic {
            total += lognormal_ln_density(f.obs.eta, prior.eta_mean_log, prior.eta_var_log);
        }
    }
    total += rate_density(&prior.lambda, &lambdas);
    total += rate_density(&prior.mu, &mus);
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}
