//! Severity and noise distributions.
//!
//! * [`PowerLaw`]: discrete power law on `{xmin, xmin+1, ...}`.
//! * [`DiscreteLogNormal`]: a continuous log-normal binned onto the positive
//!   integers, with all mass below 1.5 placed on 1.
//! * [`TruncatedPoisson`]: Poisson conditioned on being at least one.
//! * [`BivariateLogNormal`]: the joint prior on a pair of positive rates.
//!
//! Every family here implements [`SeverityPmf`] where it models event sizes,
//! which is what the observation model and the samplers build on.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Open01, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::special::{log_hurwitz_zeta, scaled_sum, ALPHA_EPS};
use crate::{Error, Result};

/// Largest value a power-law draw may take; deeper draws saturate here.
pub const SAMPLE_CAP: u64 = 1 << 62;

/// A distribution on positive integer event sizes.
pub trait SeverityPmf {
    /// Smallest point of the support.
    fn support_min(&self) -> u64;

    /// `ln Pr(W = w)`, `-inf` below the support. Unchecked.
    fn ln_pmf_unchecked(&self, w: u64) -> f64;

    /// `Pr(W > w)`.
    fn survival(&self, w: u64) -> f64;
}

/// Discrete power law `Pr(W = w) = w^{-α} / ζ(α, xmin)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub alpha: f64,
    pub xmin: u64,
}

impl PowerLawParams {
    pub fn new(alpha: f64, xmin: u64) -> Result<Self> {
        if !(alpha > 1.0 + ALPHA_EPS) || !alpha.is_finite() {
            return Err(Error::domain(format!("power law needs alpha > 1, got {alpha}")));
        }
        if xmin < 1 {
            return Err(Error::domain("power law needs xmin >= 1"));
        }
        Ok(Self { alpha, xmin })
    }
}

/// A power law with its normaliser evaluated once.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    params: PowerLawParams,
    ln_norm: f64,
    /// `ζ(α, xmin) · xmin^α`
    scaled_norm: f64,
}

impl PowerLaw {
    pub fn new(alpha: f64, xmin: u64) -> Result<Self> {
        Self::from_params(PowerLawParams::new(alpha, xmin)?)
    }

    pub fn from_params(params: PowerLawParams) -> Result<Self> {
        let params = PowerLawParams::new(params.alpha, params.xmin)?;
        let ln_norm = log_hurwitz_zeta(params.alpha, params.xmin)?;
        let scaled_norm = scaled_sum(params.alpha, params.xmin, 0);
        Ok(Self {
            params,
            ln_norm,
            scaled_norm,
        })
    }

    pub fn params(&self) -> PowerLawParams {
        self.params
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn xmin(&self) -> u64 {
        self.params.xmin
    }

    /// `ln ζ(α, xmin)`.
    pub fn ln_normaliser(&self) -> f64 {
        self.ln_norm
    }

    fn check_support(&self, w: u64) -> Result<()> {
        if w < self.params.xmin {
            return Err(Error::domain(format!(
                "{w} is below the power-law lower bound {}",
                self.params.xmin
            )));
        }
        Ok(())
    }

    pub fn ln_pmf(&self, w: u64) -> Result<f64> {
        self.check_support(w)?;
        Ok(self.ln_pmf_unchecked(w))
    }

    pub fn pmf(&self, w: u64) -> Result<f64> {
        self.ln_pmf(w).map(f64::exp)
    }

    /// `Pr(W ≤ w) = 1 - ζ(α, w+1) / ζ(α, xmin)`.
    pub fn cdf(&self, w: u64) -> Result<f64> {
        self.check_support(w)?;
        Ok(1.0 - self.survival(w))
    }

    /// Draw one value by exact inversion of the CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let v: f64 = rng.sample(Open01);
        self.invert_survival(v, self.params.xmin)
    }

    /// Smallest `w ≥ from` with `Pr(W > w) ≤ v`.
    fn invert_survival(&self, v: f64, from: u64) -> u64 {
        if self.survival(from) <= v {
            return from;
        }
        // exponential search for an upper bracket, then bisect
        let mut lo = from;
        let mut hi = from.max(1).saturating_mul(2);
        while self.survival(hi) > v {
            lo = hi;
            if hi >= SAMPLE_CAP {
                return SAMPLE_CAP;
            }
            hi = hi.saturating_mul(2).min(SAMPLE_CAP);
        }
        // invariant: survival(lo) > v >= survival(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.survival(mid) > v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

impl SeverityPmf for PowerLaw {
    fn support_min(&self) -> u64 {
        self.params.xmin
    }

    fn ln_pmf_unchecked(&self, w: u64) -> f64 {
        if w < self.params.xmin {
            return f64::NEG_INFINITY;
        }
        -self.params.alpha * (w as f64).ln() - self.ln_norm
    }

    fn survival(&self, w: u64) -> f64 {
        if w < self.params.xmin {
            return 1.0;
        }
        // ζ(α, w+1) / ζ(α, xmin), both scaled to avoid underflow
        let a = self.params.alpha;
        let upper = scaled_sum(a, w + 1, 0);
        let ratio = ((w + 1) as f64 / self.params.xmin as f64).powf(-a);
        (ratio * upper / self.scaled_norm).min(1.0)
    }
}

/// Inverse-transform sampler with a precomputed survival table over the
/// body of the distribution; draws past the table fall back to bisection
/// on the exact zeta-ratio survival function.
#[derive(Debug, Clone)]
pub struct PowerLawSampler {
    dist: PowerLaw,
    /// `survival[i] = Pr(W > xmin + i)`
    survival: Vec<f64>,
}

impl PowerLawSampler {
    const TABLE_MAX: usize = 1 << 14;
    const TABLE_FLOOR: f64 = 1e-4;

    pub fn new(dist: PowerLaw) -> Self {
        let mut survival = Vec::new();
        let mut w = dist.xmin();
        loop {
            let s = dist.survival(w);
            survival.push(s);
            if s < Self::TABLE_FLOOR || survival.len() >= Self::TABLE_MAX {
                break;
            }
            w += 1;
        }
        Self { dist, survival }
    }

    pub fn distribution(&self) -> &PowerLaw {
        &self.dist
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let v: f64 = rng.sample(Open01);
        let last = *self.survival.last().expect("table is never empty");
        if v >= last {
            // first index with survival <= v; the table is decreasing
            let idx = self.survival.partition_point(|&s| s > v);
            self.dist.xmin() + idx as u64
        } else {
            let from = self.dist.xmin() + self.survival.len() as u64;
            self.dist.invert_survival(v, from)
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// `n` i.i.d. power-law draws, reproducible from `seed`.
pub fn powerlaw_sample(params: PowerLawParams, n: usize, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    let sampler = PowerLawSampler::new(PowerLaw::from_params(params)?);
    let mut rng = crate::rng::stream(seed, 0);
    Ok(sampler.sample_n(n, &mut rng))
}

/// Parameters of the underlying continuous log-normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLogNormalParams {
    pub mu_ln: f64,
    pub sigma_ln: f64,
}

/// Log-normal binned on half-integers: `w ≥ 2` takes `[w-0.5, w+0.5)`,
/// `w = 1` takes everything below 1.5.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteLogNormal {
    params: DiscreteLogNormalParams,
}

/// `ln(1 - Φ(z))`, finite however far out `z` is.
fn ln_norm_sf(z: f64) -> f64 {
    if z < 8.0 {
        return (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln();
    }
    // Mills ratio (1 - Φ)/φ by its continued fraction z + 1/(z + 2/(z + ...))
    let mut t = z;
    for k in (1..=60).rev() {
        t = z + k as f64 / t;
    }
    -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - t.ln()
}

fn ln_norm_cdf(z: f64) -> f64 {
    ln_norm_sf(-z)
}

fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `ln(Φ(b) - Φ(a))` for `a < b`, as a difference of whichever tail is
/// smaller.
fn ln_norm_interval(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > 0.0 {
        (ln_norm_sf(a), ln_norm_sf(b))
    } else {
        (ln_norm_cdf(b), ln_norm_cdf(a))
    };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ln_1m_exp(lo - hi)
}

/// `ln(1 - e^d)` for `d ≤ 0`.
fn ln_1m_exp(d: f64) -> f64 {
    if d > -std::f64::consts::LN_2 {
        (-d.exp_m1()).ln()
    } else {
        (-d.exp()).ln_1p()
    }
}

impl DiscreteLogNormal {
    pub fn new(mu_ln: f64, sigma_ln: f64) -> Result<Self> {
        if !(sigma_ln > 0.0) || !sigma_ln.is_finite() || !mu_ln.is_finite() {
            return Err(Error::domain(format!(
                "log-normal needs finite mu and sigma > 0, got ({mu_ln}, {sigma_ln})"
            )));
        }
        Ok(Self {
            params: DiscreteLogNormalParams { mu_ln, sigma_ln },
        })
    }

    pub fn params(&self) -> DiscreteLogNormalParams {
        self.params
    }

    fn z(&self, edge: f64) -> f64 {
        (edge.ln() - self.params.mu_ln) / self.params.sigma_ln
    }

    pub fn ln_pmf(&self, w: u64) -> Result<f64> {
        if w < 1 {
            return Err(Error::domain("discrete log-normal support starts at 1"));
        }
        Ok(self.ln_pmf_unchecked(w))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let d = LogNormal::new(self.params.mu_ln, self.params.sigma_ln)
            .expect("parameters validated at construction");
        let y: f64 = d.sample(rng);
        if y < 1.5 {
            1
        } else if y >= SAMPLE_CAP as f64 {
            SAMPLE_CAP
        } else {
            (y + 0.5).floor() as u64
        }
    }
}

impl SeverityPmf for DiscreteLogNormal {
    fn support_min(&self) -> u64 {
        1
    }

    fn ln_pmf_unchecked(&self, w: u64) -> f64 {
        match w {
            0 => f64::NEG_INFINITY,
            1 => ln_norm_cdf(self.z(1.5)),
            _ => {
                let w = w as f64;
                ln_norm_interval(self.z(w - 0.5), self.z(w + 0.5))
            }
        }
    }

    fn survival(&self, w: u64) -> f64 {
        if w == 0 {
            return 1.0;
        }
        norm_sf(self.z(w as f64 + 0.5))
    }
}

/// `Pr(Y = y | x) = x^y e^{-x} / (y! (1 - e^{-x}))` on `y ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedPoisson {
    rate: f64,
    ln_rate: f64,
    /// `-x - ln(1 - e^{-x})`
    offset: f64,
}

impl TruncatedPoisson {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::domain(format!("truncated Poisson needs rate > 0, got {rate}")));
        }
        Ok(Self {
            rate,
            ln_rate: rate.ln(),
            offset: -rate - (-(-rate).exp_m1()).ln(),
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn ln_pmf(&self, y: u64) -> Result<f64> {
        if y == 0 {
            return Err(Error::domain("truncated Poisson excludes zero"));
        }
        Ok(self.ln_pmf_unchecked(y))
    }

    #[inline]
    pub(crate) fn ln_pmf_unchecked(&self, y: u64) -> f64 {
        if y == 0 {
            return f64::NEG_INFINITY;
        }
        let y = y as f64;
        y * self.ln_rate + self.offset - ln_gamma(y + 1.0)
    }

    /// Rejection from the untruncated Poisson: redraw on zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let poisson = Poisson::new(self.rate).expect("rate validated at construction");
        loop {
            let y: f64 = poisson.sample(rng);
            if y >= 1.0 {
                return y as u64;
            }
        }
    }
}

/// Free-function form of [`TruncatedPoisson::ln_pmf`].
pub fn truncated_poisson_log_pmf(y: u64, x: f64) -> Result<f64> {
    TruncatedPoisson::new(x)?.ln_pmf(y)
}

/// Log-normal distribution on a pair of positive reals: `(ln a, ln b)` is
/// bivariate normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateLogNormal {
    pub mean_log: [f64; 2],
    pub cov_log: [[f64; 2]; 2],
}

impl BivariateLogNormal {
    pub fn new(mean_log: [f64; 2], cov_log: [[f64; 2]; 2]) -> Result<Self> {
        let d = Self { mean_log, cov_log };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.cov_log;
        let symmetric = (c[0][1] - c[1][0]).abs() <= 1e-12 * (c[0][1].abs() + 1.0);
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        if !symmetric || !(c[0][0] > 0.0) || !(det > 0.0) {
            return Err(Error::domain("log-normal prior covariance must be symmetric positive definite"));
        }
        if !self.mean_log.iter().all(|m| m.is_finite()) {
            return Err(Error::domain("log-normal prior mean must be finite"));
        }
        Ok(())
    }

    pub fn ln_density(&self, pair: [f64; 2]) -> Result<f64> {
        if !(pair[0] > 0.0 && pair[1] > 0.0) {
            return Err(Error::domain("log-normal density needs positive arguments"));
        }
        Ok(self.ln_density_unchecked(pair))
    }

    pub(crate) fn ln_density_unchecked(&self, pair: [f64; 2]) -> f64 {
        let (la, lb) = (pair[0].ln(), pair[1].ln());
        let (d0, d1) = (la - self.mean_log[0], lb - self.mean_log[1]);
        let c = self.cov_log;
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        // quadratic form with the explicit 2x2 inverse
        let q = (c[1][1] * d0 * d0 - 2.0 * c[0][1] * d0 * d1 + c[0][0] * d1 * d1) / det;
        -std::f64::consts::LN_2 - std::f64::consts::PI.ln() - 0.5 * det.ln() - 0.5 * q - la - lb
    }

    /// Marginal `(mean, variance)` of the log of component `i`.
    pub fn marginal(&self, i: usize) -> (f64, f64) {
        (self.mean_log[i], self.cov_log[i][i])
    }
}

/// Univariate log-normal log-density for a log-scale mean and variance.
pub fn lognormal_ln_density(x: f64, mean_log: f64, var_log: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    let lx = x.ln();
    let d = lx - mean_log;
    -0.5 * (2.0 * std::f64::consts::PI * var_log).ln() - 0.5 * d * d / var_log - lx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::hurwitz_zeta;
    use proptest::prelude::*;

    const PI2_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

    #[test]
    fn powerlaw_pmf_values() {
        let d = PowerLaw::new(2.0, 1).unwrap();
        assert!((d.ln_pmf(1).unwrap() - (1.0 / PI2_6).ln()).abs() < 1e-13);
        assert!((d.ln_pmf(1).unwrap() + 0.49770).abs() < 1e-5);
        let diff = d.ln_pmf(2).unwrap() - d.ln_pmf(1).unwrap();
        assert!((diff + 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!(d.ln_pmf(0).is_err());
        assert!(PowerLaw::new(2.5, 7).unwrap().ln_pmf(6).is_err());
    }

    #[test]
    fn powerlaw_pmf_sums_to_one() {
        let d = PowerLaw::new(2.5, 1).unwrap();
        let mut s = 0.0;
        for w in (1..=1_000_000u64).rev() {
            s += d.pmf(w).unwrap();
        }
        // tail beyond 10^6 bounded by the integral ∫_{10^6}^∞ t^{-2.5} dt / ζ(2.5)
        let tail_bound = (1e6f64).powf(-1.5) / 1.5 / hurwitz_zeta(2.5, 1).unwrap();
        assert!((1.0 - s) <= tail_bound + 1e-12 && (1.0 - s) >= 0.0);
        assert!((s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn powerlaw_cdf_values() {
        let d = PowerLaw::new(2.0, 1).unwrap();
        assert!((d.cdf(1).unwrap() - 1.0 / PI2_6).abs() < 1e-13);
        for &(a, x) in &[(1.7, 3u64), (2.5, 10), (3.0, 1)] {
            let d = PowerLaw::new(a, x).unwrap();
            assert!((d.cdf(x).unwrap() - d.pmf(x).unwrap()).abs() < 1e-14);
        }
        let d = PowerLaw::new(2.5, 1).unwrap();
        let c = d.cdf(1_000_000).unwrap();
        let tail = hurwitz_zeta(2.5, 1_000_001).unwrap() / hurwitz_zeta(2.5, 1).unwrap();
        assert!(c > 0.999_999);
        assert!((1.0 - c - tail).abs() < 1e-15);
        assert!(d.cdf(0).is_err());
    }

    #[test]
    fn powerlaw_cdf_matches_pmf_cumsum() {
        let d = PowerLaw::new(1.8, 4).unwrap();
        let mut acc = 0.0;
        for w in 4..2000 {
            acc += d.pmf(w).unwrap();
            assert!((acc - d.cdf(w).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn powerlaw_sample_support() {
        let draws = powerlaw_sample(PowerLawParams::new(2.5, 7).unwrap(), 5000, 3).unwrap();
        assert!(draws.iter().all(|&w| w >= 7));
        assert!(powerlaw_sample(PowerLawParams { alpha: 2.5, xmin: 7 }, 0, 3).is_err());
    }

    #[test]
    fn powerlaw_sample_reproducible() {
        let p = PowerLawParams::new(2.2, 1).unwrap();
        assert_eq!(powerlaw_sample(p, 100, 9).unwrap(), powerlaw_sample(p, 100, 9).unwrap());
        assert_ne!(powerlaw_sample(p, 100, 9).unwrap(), powerlaw_sample(p, 100, 10).unwrap());
    }

    #[test]
    fn powerlaw_sample_capped_mean() {
        // E[min(W, cap)] by brute-force pmf summation: Σ_{w<cap} w·pmf + cap·Pr(W ≥ cap)
        let cap = 100_000_000u64;
        let d = PowerLaw::new(2.2, 1).unwrap();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        let mut w = cap - 1;
        while w >= 1 {
            let p = d.pmf(w).unwrap();
            m1 += w as f64 * p;
            m2 += (w as f64).powi(2) * p;
            w -= 1;
        }
        let tail = d.survival(cap - 1);
        m1 += cap as f64 * tail;
        m2 += (cap as f64).powi(2) * tail;
        let sd = (m2 - m1 * m1).sqrt();

        let n = 20_000;
        let draws = powerlaw_sample(d.params(), n, 17).unwrap();
        let mean = draws.iter().map(|&w| w.min(cap) as f64).sum::<f64>() / n as f64;
        let se = sd / (n as f64).sqrt();
        assert!((mean - m1).abs() < 3.0 * se, "mean {mean} vs {m1} (se {se})");
    }

    #[test]
    fn powerlaw_sample_ks_distance() {
        let d = PowerLaw::new(2.5, 1).unwrap();
        let mut draws = powerlaw_sample(d.params(), 100_000, 5).unwrap();
        draws.sort_unstable();
        let n = draws.len() as f64;
        let mut ks: f64 = 0.0;
        let mut i = 0;
        while i < draws.len() {
            let w = draws[i];
            let j = draws.partition_point(|&v| v <= w);
            // compare just below and at the atom
            let f = d.cdf(w).unwrap();
            let f_prev = if w > 1 { d.cdf(w - 1).unwrap() } else { 0.0 };
            ks = ks.max((f - j as f64 / n).abs()).max((f_prev - i as f64 / n).abs());
            i = j;
        }
        assert!(ks < 0.01, "{ks}");
    }

    #[test]
    fn powerlaw_sum_of_draws_median() {
        let p = PowerLawParams::new(2.2, 1).unwrap();
        let mut sums: Vec<u64> = (0..50)
            .map(|s| powerlaw_sample(p, 20_000, 1000 + s).unwrap().iter().sum())
            .collect();
        sums.sort_unstable();
        let median = (sums[24] + sums[25]) as f64 / 2.0;
        assert!((median / 64_000.0 - 1.0).abs() < 0.2, "{median}");
    }

    #[test]
    fn sampler_table_and_tail_agree_with_direct_inversion() {
        let d = PowerLaw::new(1.9, 2).unwrap();
        let s = PowerLawSampler::new(d);
        let mut r1 = crate::rng::stream(4, 0);
        let mut r2 = crate::rng::stream(4, 0);
        for _ in 0..20_000 {
            assert_eq!(s.sample(&mut r1), d.sample(&mut r2));
        }
    }

    #[test]
    fn truncated_poisson_values() {
        let v = truncated_poisson_log_pmf(1, 1.0).unwrap();
        let e = (-1f64).exp();
        assert!((v - (e / (1.0 - e)).ln()).abs() < 1e-14);
        assert!((v.exp() - 0.581_976_706_869_326_4).abs() < 1e-12);
        assert!(truncated_poisson_log_pmf(0, 1.0).is_err());
        assert!(truncated_poisson_log_pmf(1, 0.0).is_err());
    }

    #[test]
    fn truncated_poisson_normalised_and_mode() {
        let tp = TruncatedPoisson::new(5.0).unwrap();
        let s: f64 = (1..=200).map(|y| tp.ln_pmf(y).unwrap().exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let tp = TruncatedPoisson::new(3.0).unwrap();
        let mut best = (0, f64::NEG_INFINITY);
        for y in 1..=100 {
            let l = tp.ln_pmf(y).unwrap();
            if l > best.1 {
                best = (y, l);
            }
        }
        // Poisson(3) has a double mode at 2 and 3; the later one equals it
        assert!((tp.ln_pmf(3).unwrap() - best.1).abs() < 1e-14);
        assert!(best.0 == 2 || best.0 == 3);
    }

    #[test]
    fn truncated_poisson_finite_far_out() {
        let tp = TruncatedPoisson::new(1e9).unwrap();
        assert!(tp.ln_pmf(1_000_000_000).unwrap().is_finite());
        assert!(tp.ln_pmf(1).unwrap().is_finite());
    }

    #[test]
    fn truncated_poisson_sampling_small_rate() {
        let tp = TruncatedPoisson::new(0.01).unwrap();
        let p1 = tp.ln_pmf(1).unwrap().exp();
        assert!((p1 - 0.995).abs() < 1e-3);
        let mut rng = crate::rng::stream(8, 0);
        let n = 100_000;
        let ones = (0..n).filter(|_| tp.sample(&mut rng) == 1).count() as f64;
        let se = (p1 * (1.0 - p1) / n as f64).sqrt();
        assert!((ones / n as f64 - p1).abs() < 4.0 * se);
    }

    #[test]
    fn truncated_poisson_sampling_chi_square() {
        let tp = TruncatedPoisson::new(2.0).unwrap();
        let mut rng = crate::rng::stream(21, 0);
        let n = 1_000_000;
        let mut counts = vec![0u64; 12];
        for _ in 0..n {
            let y = tp.sample(&mut rng) as usize;
            assert!(y >= 1);
            counts[y.min(11)] += 1;
        }
        // bins 1..=10 plus a pooled ≥ 11 bin
        let mut chi2 = 0.0;
        let mut pooled = 1.0;
        for y in 1..=10u64 {
            let p = tp.ln_pmf(y).unwrap().exp();
            pooled -= p;
            let e = p * n as f64;
            chi2 += (counts[y as usize] as f64 - e).powi(2) / e;
        }
        let e = pooled * n as f64;
        chi2 += (counts[11] as f64 - e).powi(2) / e;
        // chi-square(10) upper 0.001 quantile
        assert!(chi2 < 29.588, "{chi2}");
    }

    #[test]
    fn discrete_lognormal_normalisation() {
        let d = DiscreteLogNormal::new(2.0, 1.0).unwrap();
        let big_w = 1_000_000u64;
        let mut s = 0.0;
        for w in (1..=big_w).rev() {
            s += d.ln_pmf(w).unwrap().exp();
        }
        // oracle: 1 - Φc((ln(W + 0.5) - 2) / 1) via statrs' normal
        use statrs::distribution::{ContinuousCDF, Normal};
        let tail = Normal::new(2.0, 1.0).unwrap().sf((big_w as f64 + 0.5).ln());
        assert!((s - (1.0 - tail)).abs() < 1e-10, "{s}");
        assert!((d.survival(big_w) - tail).abs() < 1e-15);
    }

    #[test]
    fn discrete_lognormal_degenerate_limit() {
        let d = DiscreteLogNormal::new(0.0, 0.01).unwrap();
        assert!(d.ln_pmf(1).unwrap().exp() > 1.0 - 1e-12);
        assert!(d.ln_pmf(2).unwrap().exp() < 1e-12);
        assert!(d.ln_pmf(0).is_err());
        assert!(DiscreteLogNormal::new(0.0, 0.0).is_err());
    }

    #[test]
    fn discrete_lognormal_median() {
        let d = DiscreteLogNormal::new(3.0, 0.5).unwrap();
        let mut rng = crate::rng::stream(2, 0);
        let mut xs: Vec<u64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        xs.sort_unstable();
        let median = xs[50_000] as f64;
        assert!((median - 3f64.exp()).abs() <= 1.0, "{median}");
    }

    #[test]
    fn discrete_lognormal_sampler_matches_pmf() {
        let d = DiscreteLogNormal::new(1.0, 0.8).unwrap();
        let mut rng = crate::rng::stream(12, 0);
        let n = 200_000;
        let mut counts = vec![0u64; 6];
        for _ in 0..n {
            counts[(d.sample(&mut rng) as usize).min(5)] += 1;
        }
        for w in 1..=4u64 {
            let p = d.ln_pmf(w).unwrap().exp();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[w as usize] as f64 / n as f64 - p).abs() < 4.0 * se, "w={w}");
        }
    }

    fn default_prior() -> BivariateLogNormal {
        BivariateLogNormal::new([0.0, -3.0], [[1.0, 0.6], [0.6, 2.0]]).unwrap()
    }

    /// Closed-form bivariate normal log-density, written out long-hand.
    fn bvn_ln_density(x: f64, y: f64, m: [f64; 2], s: [[f64; 2]; 2]) -> f64 {
        let sx = s[0][0].sqrt();
        let sy = s[1][1].sqrt();
        let rho = s[0][1] / (sx * sy);
        let zx = (x - m[0]) / sx;
        let zy = (y - m[1]) / sy;
        let q = (zx * zx - 2.0 * rho * zx * zy + zy * zy) / (1.0 - rho * rho);
        -(2.0 * std::f64::consts::PI * sx * sy * (1.0 - rho * rho).sqrt()).ln() - 0.5 * q
    }

    #[test]
    fn bivariate_lognormal_at_mode_region() {
        let prior = default_prior();
        let v = prior.ln_density([1.0, (-3f64).exp()]).unwrap();
        let expected = bvn_ln_density(0.0, -3.0, prior.mean_log, prior.cov_log) - (0.0 + (-3.0));
        assert!((v - expected).abs() < 1e-12);
        assert!(prior.ln_density([0.0, 1.0]).is_err());
        assert!(prior.ln_density([1.0, -1.0]).is_err());
    }

    #[test]
    fn bivariate_lognormal_integrates_to_one() {
        // midpoint rule in log space, where the density is a plain Gaussian
        let prior = default_prior();
        let (n, half) = (400, 8.0);
        let h0 = 2.0 * half * 1.0 / n as f64;
        let h1 = 2.0 * half * 2f64.sqrt() / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let u = prior.mean_log[0] - half + (i as f64 + 0.5) * h0;
            for j in 0..n {
                let v = prior.mean_log[1] - half * 2f64.sqrt() + (j as f64 + 0.5) * h1;
                let (a, b) = (u.exp(), v.exp());
                // change of variables: dA dB = a b du dv
                total += prior.ln_density([a, b]).unwrap().exp() * a * b * h0 * h1;
            }
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn bivariate_lognormal_separates_when_diagonal() {
        let prior = BivariateLogNormal::new([0.5, -1.0], [[1.5, 0.0], [0.0, 0.7]]).unwrap();
        for &(a, b) in &[(0.3, 2.0), (1.0, 1.0), (5.0, 0.01)] {
            let joint = prior.ln_density([a, b]).unwrap();
            let sep = lognormal_ln_density(a, 0.5, 1.5) + lognormal_ln_density(b, -1.0, 0.7);
            assert!((joint - sep).abs() < 1e-12);
        }
    }

    #[test]
    fn bivariate_lognormal_rejects_bad_covariance() {
        assert!(BivariateLogNormal::new([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(BivariateLogNormal::new([0.0, 0.0], [[1.0, 0.1], [0.2, 1.0]]).is_err());
    }

    #[test]
    fn normal_tail_in_log_space() {
        // 40-digit reference values
        for (z, want) in [
            (8.0, -35.013437159914549896),
            (10.0, -53.231285150512470578),
            (40.0, -804.60844201375378817),
            (68.0, -2317.1386623845569247),
        ] {
            let got = ln_norm_sf(z);
            assert!((got - want).abs() < 1e-12 * want.abs(), "z {z}: {got}");
        }
        let below = ln_norm_sf(8.0 - 1e-12);
        let above = ln_norm_sf(8.0);
        assert!((below - above).abs() < 1e-10);
        let d = DiscreteLogNormal::new(0.0, 0.3).unwrap();
        let got = d.ln_pmf(712_124_486).unwrap();
        assert!((got + 2328.4198736064957710).abs() < 1e-9 * 2328.0, "{got}");
    }

    proptest! {
        #[test]
        fn log_pmfs_finite_up_to_1e9(w in 1u64..=1_000_000_000, a in 1.5f64..3.0,
                                     m in 0.0f64..5.0, s in 0.3f64..3.0, x in 0.5f64..1e6) {
            prop_assert!(PowerLaw::new(a, 1).unwrap().ln_pmf(w).unwrap().is_finite());
            prop_assert!(DiscreteLogNormal::new(m, s).unwrap().ln_pmf(w).unwrap().is_finite());
            prop_assert!(TruncatedPoisson::new(x).unwrap().ln_pmf(w).unwrap().is_finite());
        }

        #[test]
        fn powerlaw_cdf_nondecreasing(a in 1.2f64..4.0, x in 1u64..50, k in 0u64..10_000) {
            let d = PowerLaw::new(a, x).unwrap();
            let c0 = d.cdf(x + k).unwrap();
            let c1 = d.cdf(x + k + 1).unwrap();
            prop_assert!(c1 >= c0 && c1 <= 1.0);
        }
    }
}
