//! Observation errors layered on a true event size `w`.
//!
//! 1. The event is recorded at all with probability [`ObservationModel`].
//! 2. A recorded size `y` carries truncated-Poisson counting noise around `w`.
//! 3. With probability `p`, a recorded `y > 2` is heaped onto the nearest
//!    multiple of five.
//!
//! The sampler never proposes the intermediate `y`; it works with
//! [`marginal_z_given_x_log`] instead. Likewise, unrecorded events are summed
//! out through [`observation_normalizer`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{SeverityPmf, TruncatedPoisson};
use crate::{Error, Result};

/// Heaping grid.
pub const HEAP_GRID: u64 = 5;

/// Counts at or below this are never heaped.
pub const HEAP_EXEMPT_MAX: u64 = 2;

/// Functional form of the recording probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationVariant {
    /// `1 - exp{-λ - μ(w-1)}`
    ExponentialLinear,
    /// `1 - exp{-λ - μ(w-1) - η(w-1)²}`
    ExponentialQuadratic,
    /// `1 / (1 + exp(-μ w))`; `λ` is carried but unused.
    Logistic,
}

impl std::fmt::Display for ObservationVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ExponentialLinear => "exponential-linear",
            Self::ExponentialQuadratic => "exponential-quadratic",
            Self::Logistic => "logistic",
        })
    }
}

impl std::str::FromStr for ObservationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential-linear" | "linear" => Ok(Self::ExponentialLinear),
            "exponential-quadratic" | "quadratic" => Ok(Self::ExponentialQuadratic),
            "logistic" => Ok(Self::Logistic),
            other => Err(Error::config(format!("unknown observation variant '{other}'"))),
        }
    }
}

/// Probability that an event of a given size enters the record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub variant: ObservationVariant,
    pub lambda: f64,
    pub mu: f64,
    #[serde(default)]
    pub eta: f64,
}

impl ObservationModel {
    pub fn exponential_linear(lambda: f64, mu: f64) -> Result<Self> {
        Self::new(ObservationVariant::ExponentialLinear, lambda, mu, 0.0)
    }

    pub fn new(variant: ObservationVariant, lambda: f64, mu: f64, eta: f64) -> Result<Self> {
        let m = Self {
            variant,
            lambda,
            mu,
            eta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let lambda_ok = self.variant == ObservationVariant::Logistic || self.lambda > 0.0;
        if !lambda_ok || !(self.mu > 0.0) {
            return Err(Error::domain(format!(
                "observation rates must be positive (lambda = {}, mu = {})",
                self.lambda, self.mu
            )));
        }
        if self.variant == ObservationVariant::ExponentialQuadratic && !(self.eta >= 0.0) {
            return Err(Error::domain(format!("eta must be non-negative, got {}", self.eta)));
        }
        if ![self.lambda, self.mu, self.eta].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("observation parameters must be finite"));
        }
        Ok(())
    }

    /// Exponent `t` with `miss = e^{-t}` for the exponential forms, or the
    /// logistic argument `μw`.
    #[inline]
    fn exponent(&self, w: u64) -> f64 {
        let d = w as f64 - 1.0;
        match self.variant {
            ObservationVariant::ExponentialLinear => self.lambda + self.mu * d,
            ObservationVariant::ExponentialQuadratic => self.lambda + self.mu * d + self.eta * d * d,
            ObservationVariant::Logistic => self.mu * w as f64,
        }
    }

    /// Recording probability for an event of size `w ≥ 1`.
    pub fn probability(&self, w: u64) -> Result<f64> {
        if w < 1 {
            return Err(Error::domain("event sizes start at 1"));
        }
        self.validate()?;
        Ok(self.probability_unchecked(w))
    }

    #[inline]
    pub(crate) fn probability_unchecked(&self, w: u64) -> f64 {
        let t = self.exponent(w);
        match self.variant {
            ObservationVariant::Logistic => 1.0 / (1.0 + (-t).exp()),
            _ => -(-t).exp_m1(),
        }
    }

    /// `ln Pr(recorded | w)`.
    #[inline]
    pub(crate) fn ln_probability_unchecked(&self, w: u64) -> f64 {
        let t = self.exponent(w);
        match self.variant {
            ObservationVariant::Logistic => -(-t).exp().ln_1p(),
            _ => (-(-t).exp_m1()).ln(),
        }
    }

    /// `Pr(missed | w)`, accurate when it is tiny.
    #[inline]
    pub(crate) fn miss_probability_unchecked(&self, w: u64) -> f64 {
        let t = self.exponent(w);
        match self.variant {
            ObservationVariant::Logistic => 1.0 / (1.0 + t.exp()),
            _ => (-t).exp(),
        }
    }
}

/// The heaping stage of the recording process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeapingModel {
    pub p: f64,
}

impl HeapingModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("heaping probability must lie in [0, 1], got {p}")));
        }
        Ok(Self { p })
    }

    pub fn apply<R: Rng + ?Sized>(&self, y: u64, rng: &mut R) -> u64 {
        heap(y, self.p, rng)
    }
}

/// Multiple of five a count `y > 2` is heaped onto: `5·([(y-2.5)/5] + 1)`.
pub fn heap_target(y: u64) -> u64 {
    if y <= HEAP_EXEMPT_MAX {
        return y;
    }
    // (y - 2.5)/5 is positive here, so truncation is floor((2y - 5) / 10)
    HEAP_GRID * ((2 * y - 5) / (2 * HEAP_GRID) + 1)
}

/// Apply heaping once: counts 1 and 2 pass through, others move to
/// [`heap_target`] with probability `p`.
pub fn heap<R: Rng + ?Sized>(y: u64, p: f64, rng: &mut R) -> u64 {
    if y <= HEAP_EXEMPT_MAX {
        return y;
    }
    if rng.random::<f64>() < p {
        heap_target(y)
    } else {
        y
    }
}

/// Whether a recorded value could be the result of heaping.
#[inline]
pub fn is_heap_point(z: u64) -> bool {
    z > HEAP_EXEMPT_MAX && z % HEAP_GRID == 0
}

/// The parts of `Pr(z | x, p)` that do not depend on `p`.
///
/// `Pr(z | x, p)` is `direct` for exempt `z`, otherwise
/// `(1-p)·direct + p·bucket` where `bucket = Σ_{k=-2}^{2} f(z-k | x)` for
/// heap points and zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeapTerms {
    pub exempt: bool,
    pub ln_direct: f64,
    /// `-inf` when `z` is not a heap point.
    pub ln_bucket: f64,
}

impl HeapTerms {
    pub fn new(z: u64, x: u64) -> Self {
        let tp = TruncatedPoisson::new(x as f64).expect("latent counts are positive");
        let ln_direct = tp.ln_pmf_unchecked(z);
        let exempt = z <= HEAP_EXEMPT_MAX;
        let ln_bucket = if is_heap_point(z) {
            let terms: Vec<f64> = (z - 2..=z + 2).map(|j| tp.ln_pmf_unchecked(j)).collect();
            log_sum_exp(&terms)
        } else {
            f64::NEG_INFINITY
        };
        Self {
            exempt,
            ln_direct,
            ln_bucket,
        }
    }

    /// `ln Pr(z | x, p)` given `ln p` and `ln(1-p)`.
    #[inline]
    pub fn ln_prob(&self, ln_p: f64, ln_1mp: f64) -> f64 {
        if self.exempt {
            self.ln_direct
        } else if self.ln_bucket == f64::NEG_INFINITY {
            ln_1mp + self.ln_direct
        } else {
            log_add_exp(ln_1mp + self.ln_direct, ln_p + self.ln_bucket)
        }
    }
}

#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln Pr(Z = z | X = x)` with the counting error summed out.
pub fn marginal_z_given_x_log(z: u64, x: u64, p: f64) -> Result<f64> {
    if z < 1 || x < 1 {
        return Err(Error::domain("recorded and latent counts start at 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("heaping probability must lie in [0, 1], got {p}")));
    }
    Ok(HeapTerms::new(z, x).ln_prob(p.ln(), (-p).ln_1p()))
}

/// `ln[Pr(recorded | x) · Pr(W = x)]` for a power-law body with `xmin = 1`:
/// proportional to the pmf of a recorded event's true size.
pub fn marginal_x_unnormalized_log(x: u64, alpha: f64, model: &ObservationModel) -> Result<f64> {
    let body = crate::distributions::PowerLaw::new(alpha, 1)?;
    let obs = model.probability(x)?;
    Ok(obs.ln() + body.ln_pmf(x)?)
}

/// Absolute accuracy the normaliser is summed to.
pub const NORMALISER_TOL: f64 = 1e-12;

/// Hard cap on the number of terms summed by [`observation_normalizer`].
pub const NORMALISER_CAP: u64 = 100_000_000;

/// `q = Σ_w Pr(W = w) · Pr(recorded | w)`: the chance a random event is
/// recorded at all.
///
/// Summed term by term until the tail `Σ_{w>N} Pr(W=w)·Pr(missed|w)` is
/// bounded by `Pr(missed | N+1) · Pr(W > N) < 1e-12`; the remaining
/// `Pr(W > N)` is added in closed form.
pub fn observation_normalizer<B: SeverityPmf + ?Sized>(body: &B, model: &ObservationModel) -> Result<f64> {
    model.validate()?;
    Ok(normalizer_unchecked(body, model))
}

pub(crate) fn normalizer_unchecked<B: SeverityPmf + ?Sized>(body: &B, model: &ObservationModel) -> f64 {
    let mut w = body.support_min();
    let mut acc = 0.0;
    loop {
        // work in blocks so the survival function is evaluated rarely
        for _ in 0..32 {
            acc += body.ln_pmf_unchecked(w).exp() * model.probability_unchecked(w);
            w += 1;
        }
        let sf = body.survival(w - 1);
        if model.miss_probability_unchecked(w) * sf < NORMALISER_TOL || w >= NORMALISER_CAP {
            if w >= NORMALISER_CAP {
                log::warn!("observation normaliser hit the {NORMALISER_CAP} term cap");
            }
            return (acc + sf).min(1.0);
        }
    }
}

/// Which counting noise [`corrupt_dataset_with`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountingNoise {
    TruncatedPoisson,
    /// `y = w` exactly.
    None,
}

/// One recorded event from [`corrupt_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorruptedRecord {
    /// Position of the event in the input sequence.
    pub index: usize,
    pub true_count: u64,
    /// Count after counting noise, before heaping.
    pub noisy_count: u64,
    pub observed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub records: Vec<CorruptedRecord>,
    /// Σw over every input event.
    pub total_true: u64,
    /// Σz over recorded events.
    pub total_observed: u64,
}

impl Corruption {
    pub fn observed_counts(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.observed).collect()
    }
}

/// Push true counts through missingness, truncated-Poisson noise and heaping.
pub fn corrupt_dataset<R: Rng + ?Sized>(
    true_counts: &[u64],
    model: &ObservationModel,
    p: f64,
    rng: &mut R,
) -> Result<Corruption> {
    corrupt_dataset_with(true_counts, model, p, CountingNoise::TruncatedPoisson, rng)
}

pub fn corrupt_dataset_with<R: Rng + ?Sized>(
    true_counts: &[u64],
    model: &ObservationModel,
    p: f64,
    noise: CountingNoise,
    rng: &mut R,
) -> Result<Corruption> {
    if true_counts.is_empty() {
        return Err(Error::domain("no true counts to corrupt"));
    }
    model.validate()?;
    let heaping = HeapingModel::new(p)?;
    let mut records = Vec::new();
    let mut total_true = 0u64;
    let mut total_observed = 0u64;
    for (index, &w) in true_counts.iter().enumerate() {
        if w < 1 {
            return Err(Error::domain(format!("true count at position {index} is zero")));
        }
        total_true += w;
        if rng.random::<f64>() >= model.probability_unchecked(w) {
            continue;
        }
        let noisy = match noise {
            CountingNoise::TruncatedPoisson => TruncatedPoisson::new(w as f64)?.sample(rng),
            CountingNoise::None => w,
        };
        let observed = heaping.apply(noisy, rng);
        total_observed += observed;
        records.push(CorruptedRecord {
            index,
            true_count: w,
            noisy_count: noisy,
            observed,
        });
    }
    Ok(Corruption {
        records,
        total_true,
        total_observed,
    })
}
