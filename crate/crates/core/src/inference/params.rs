//! Model parameters and their unconstrained coordinates.
//!
//! Each force contributes, in order: its body coordinates (`α`, or the
//! log-normal `meanlog` and `ln sdlog`), `ln λ` (absent for the logistic
//! variant), `ln μ`, `ln η` (quadratic variant only) and `logit p`.

use serde::{Deserialize, Serialize};

use crate::data::Side;
use crate::distributions::{DiscreteLogNormal, PowerLaw, SeverityPmf};
use crate::error_model::{ObservationModel, ObservationVariant};
use crate::{Error, Result};

/// Family of the true-severity distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyKind {
    PowerLaw,
    LogNormal,
}

impl std::fmt::Display for BodyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BodyKind::PowerLaw => "power-law",
            BodyKind::LogNormal => "log-normal",
        })
    }
}

impl std::str::FromStr for BodyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power-law" | "powerlaw" => Ok(BodyKind::PowerLaw),
            "log-normal" | "lognormal" => Ok(BodyKind::LogNormal),
            other => Err(Error::config(format!("unknown body distribution '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Body {
    PowerLaw { alpha: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
}

impl Body {
    pub fn kind(&self) -> BodyKind {
        match self {
            Body::PowerLaw { .. } => BodyKind::PowerLaw,
            Body::LogNormal { .. } => BodyKind::LogNormal,
        }
    }

    /// The distribution itself, or `None` outside its domain.
    pub fn dist(&self) -> Option<BodyDist> {
        match *self {
            Body::PowerLaw { alpha } => PowerLaw::new(alpha, 1).ok().map(BodyDist::PowerLaw),
            Body::LogNormal { meanlog, sdlog } => DiscreteLogNormal::new(meanlog, sdlog).ok().map(BodyDist::LogNormal),
        }
    }
}

/// A body distribution ready for evaluation.
#[derive(Debug, Clone, Copy)]
pub enum BodyDist {
    PowerLaw(PowerLaw),
    LogNormal(DiscreteLogNormal),
}

impl SeverityPmf for BodyDist {
    fn support_min(&self) -> u64 {
        match self {
            BodyDist::PowerLaw(d) => d.support_min(),
            BodyDist::LogNormal(d) => d.support_min(),
        }
    }

    #[inline]
    fn ln_pmf_unchecked(&self, w: u64) -> f64 {
        match self {
            BodyDist::PowerLaw(d) => d.ln_pmf_unchecked(w),
            BodyDist::LogNormal(d) => d.ln_pmf_unchecked(w),
        }
    }

    fn survival(&self, w: u64) -> f64 {
        match self {
            BodyDist::PowerLaw(d) => d.survival(w),
            BodyDist::LogNormal(d) => d.survival(w),
        }
    }
}

/// How a coordinate maps to its natural parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Identity,
    Log,
    Logit,
}

impl Link {
    pub fn forward(&self, v: f64) -> f64 {
        match self {
            Link::Identity => v,
            Link::Log => v.ln(),
            Link::Logit => v.ln() - (-v).ln_1p(),
        }
    }

    pub fn inverse(&self, t: f64) -> f64 {
        match self {
            Link::Identity => t,
            Link::Log => t.exp(),
            Link::Logit => 1.0 / (1.0 + (-t).exp()),
        }
    }

    /// `ln |dθ/dt|` at coordinate `t`.
    pub fn ln_jacobian(&self, t: f64) -> f64 {
        match self {
            Link::Identity => 0.0,
            Link::Log => t,
            // ln p + ln(1-p) = -softplus(-t) - softplus(t)
            Link::Logit => -softplus(-t) - softplus(t),
        }
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Parameters of one force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceParams {
    pub side: Side,
    pub body: Body,
    pub obs: ObservationModel,
    pub p: f64,
}

impl ForceParams {
    /// Coordinate names and links, in layout order. Names are suffixed with
    /// the side tag, e.g. `alpha_N`.
    pub fn layout(&self) -> Vec<(String, Link)> {
        layout(self.side, self.body.kind(), self.obs.variant)
    }

    /// Natural-scale values in layout order.
    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(6);
        match self.body {
            Body::PowerLaw { alpha } => v.push(alpha),
            Body::LogNormal { meanlog, sdlog } => {
                v.push(meanlog);
                v.push(sdlog);
            }
        }
        if self.obs.variant != ObservationVariant::Logistic {
            v.push(self.obs.lambda);
        }
        v.push(self.obs.mu);
        if self.obs.variant == ObservationVariant::ExponentialQuadratic {
            v.push(self.obs.eta);
        }
        v.push(self.p);
        v
    }

    /// Rebuild from natural-scale values in layout order.
    pub fn with_values(&self, v: &[f64]) -> ForceParams {
        let mut it = v.iter().copied();
        let mut next = || it.next().expect("value count matches layout");
        let body = match self.body {
            Body::PowerLaw { .. } => Body::PowerLaw { alpha: next() },
            Body::LogNormal { .. } => Body::LogNormal {
                meanlog: next(),
                sdlog: next(),
            },
        };
        let mut obs = self.obs;
        if obs.variant != ObservationVariant::Logistic {
            obs.lambda = next();
        }
        obs.mu = next();
        if obs.variant == ObservationVariant::ExponentialQuadratic {
            obs.eta = next();
        }
        ForceParams {
            side: self.side,
            body,
            obs,
            p: next(),
        }
    }
}

/// Coordinate names and links for a force of the given shape.
pub fn layout(side: Side, body: BodyKind, variant: ObservationVariant) -> Vec<(String, Link)> {
    let tag = side.tag();
    let mut out = Vec::with_capacity(6);
    match body {
        BodyKind::PowerLaw => out.push((format!("alpha_{tag}"), Link::Identity)),
        BodyKind::LogNormal => {
            out.push((format!("meanlog_{tag}"), Link::Identity));
            out.push((format!("sdlog_{tag}"), Link::Log));
        }
    }
    if variant != ObservationVariant::Logistic {
        out.push((format!("lambda_{tag}"), Link::Log));
    }
    out.push((format!("mu_{tag}"), Link::Log));
    if variant == ObservationVariant::ExponentialQuadratic {
        out.push((format!("eta_{tag}"), Link::Log));
    }
    out.push((format!("p_{tag}"), Link::Logit));
    out
}

/// Parameters for every modelled force, US first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub forces: Vec<ForceParams>,
}

impl ModelParams {
    pub fn force(&self, side: Side) -> Option<&ForceParams> {
        self.forces.iter().find(|f| f.side == side)
    }

    pub fn layout(&self) -> Vec<(String, Link)> {
        self.forces.iter().flat_map(|f| f.layout()).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.layout().into_iter().map(|(n, _)| n).collect()
    }

    pub fn dim(&self) -> usize {
        self.forces.iter().map(|f| f.layout().len()).sum()
    }

    pub fn values(&self) -> Vec<f64> {
        self.forces.iter().flat_map(|f| f.values()).collect()
    }

    pub fn with_values(&self, v: &[f64]) -> ModelParams {
        let mut offset = 0;
        let forces = self
            .forces
            .iter()
            .map(|f| {
                let k = f.layout().len();
                let out = f.with_values(&v[offset..offset + k]);
                offset += k;
                out
            })
            .collect();
        ModelParams { forces }
    }

    /// Unconstrained coordinates.
    pub fn transformed(&self) -> Vec<f64> {
        self.layout()
            .iter()
            .zip(self.values())
            .map(|((_, link), v)| link.forward(v))
            .collect()
    }

    pub fn from_transformed(&self, t: &[f64]) -> ModelParams {
        let v: Vec<f64> = self.layout().iter().zip(t).map(|((_, link), &t)| link.inverse(t)).collect();
        self.with_values(&v)
    }

    /// Range of coordinates belonging to force `i`.
    pub fn force_range(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.forces[..i].iter().map(|f| f.layout().len()).sum();
        start..start + self.forces[i].layout().len()
    }
}
