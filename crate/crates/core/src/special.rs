//! Generalised (Hurwitz) zeta function.
//!
//! `ζ(α, m) = Σ_{n≥0} (n + m)^{-α}` is the normaliser of the discrete power
//! law on `{m, m+1, ...}`. It is evaluated by summing a few leading terms
//! directly and closing the series with an Euler-Maclaurin tail (integral
//! term, half-term, and Bernoulli corrections). All terms are computed
//! relative to `m^{-α}` so the log form stays finite when `m` is large.

use crate::{Error, Result};

/// Smallest admissible excess of `α` over one.
pub const ALPHA_EPS: f64 = 1e-6;

/// `B_{2k} / (2k)!` for k = 1..=11.
const BERNOULLI_COEFFS: [f64; 11] = [
    0.083_333_333_333_333_33,
    -0.001_388_888_888_888_889,
    3.306_878_306_878_307e-5,
    -8.267_195_767_195_768e-7,
    2.087_675_698_786_81e-8,
    -5.284_190_138_687_493e-10,
    1.338_253_653_068_467_9e-11,
    -3.389_680_296_322_582_7e-13,
    8.586_062_056_277_845e-15,
    -2.174_868_698_558_062e-16,
    5.509_002_828_360_229_5e-18,
];

/// Relative size of the first omitted Euler-Maclaurin term we accept.
const TAIL_TOL: f64 = 1e-17;

/// A single evaluation of `ζ(α, xmin)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEval {
    pub alpha: f64,
    pub xmin: u64,
    pub value: f64,
}

impl ZetaEval {
    pub fn new(alpha: f64, xmin: u64) -> Result<Self> {
        Ok(Self {
            alpha,
            xmin,
            value: hurwitz_zeta(alpha, xmin)?,
        })
    }
}

fn check_domain(alpha: f64, xmin: u64) -> Result<()> {
    if !(alpha > 1.0 + ALPHA_EPS) || !alpha.is_finite() {
        return Err(Error::domain(format!(
            "zeta series diverges for alpha = {alpha} (need alpha > 1 + {ALPHA_EPS})"
        )));
    }
    if xmin < 1 {
        return Err(Error::domain("zeta lower bound must be at least 1"));
    }
    Ok(())
}

/// `ζ(α, xmin)`. Errors if `α ≤ 1 + 1e-6` or `xmin < 1`.
pub fn hurwitz_zeta(alpha: f64, xmin: u64) -> Result<f64> {
    check_domain(alpha, xmin)?;
    let scaled = scaled_sum(alpha, xmin, 0);
    Ok((xmin as f64).powf(-alpha) * scaled)
}

/// `ln ζ(α, xmin)`, finite even where `ζ` itself would underflow.
pub fn log_hurwitz_zeta(alpha: f64, xmin: u64) -> Result<f64> {
    check_domain(alpha, xmin)?;
    let scaled = scaled_sum(alpha, xmin, 0);
    Ok(-alpha * (xmin as f64).ln() + scaled.ln())
}

/// Riemann zeta, `ζ(α) = ζ(α, 1)`.
pub fn zeta(alpha: f64) -> Result<f64> {
    hurwitz_zeta(alpha, 1)
}

/// `ζ(α, xmin)` with at least `direct_terms` leading terms summed
/// explicitly before the asymptotic tail takes over. Exposed so callers
/// can confirm the result does not depend on the cutoff.
pub fn hurwitz_zeta_with_cutoff(alpha: f64, xmin: u64, direct_terms: u64) -> Result<f64> {
    check_domain(alpha, xmin)?;
    let scaled = scaled_sum(alpha, xmin, direct_terms);
    Ok((xmin as f64).powf(-alpha) * scaled)
}

/// `ζ(α, xmin) · xmin^α`, a number in `[1, ∞)`.
///
/// Unchecked: callers have validated `alpha` and `xmin`.
pub(crate) fn scaled_sum(alpha: f64, xmin: u64, min_direct: u64) -> f64 {
    let m = xmin as f64;
    // Shift point for the asymptotic expansion. The Bernoulli terms shrink
    // roughly like ((α + 2k) / (2π a))², so `a` has to outgrow `α`.
    let mut shift = (10.0_f64).max(2.0 * alpha).ceil();
    loop {
        let start = m.max(shift).max(m + min_direct as f64);
        let direct_count = (start - m) as u64;
        let mut direct = 0.0;
        // Sum small terms first.
        for n in (0..direct_count).rev() {
            direct += ((m + n as f64) / m).powf(-alpha);
        }
        if let Some(tail) = em_tail(alpha, start, m) {
            return direct + tail;
        }
        shift *= 2.0;
    }
}

/// Euler-Maclaurin estimate of `Σ_{n≥0} (a+n)^{-α}` scaled by `m^α`.
/// `None` if the correction series has not converged at this `a`.
fn em_tail(alpha: f64, a: f64, m: f64) -> Option<f64> {
    let lead = (a / m).powf(-alpha);
    let mut bracket = a / (alpha - 1.0) + 0.5;
    // rising factorial (α)_{2k-1} times a^{-(2k-1)}
    let mut factor = alpha / a;
    for (k, coeff) in BERNOULLI_COEFFS.iter().enumerate() {
        let term = coeff * factor;
        bracket += term;
        if term.abs() <= TAIL_TOL * bracket {
            return Some(lead * bracket);
        }
        let j = 2.0 * (k as f64 + 1.0);
        factor *= (alpha + j - 1.0) * (alpha + j) / (a * a);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Brute-force oracle: explicit sum of `terms` terms, smallest first, then
    /// integral tail plus the half-term and first Bernoulli correction.
    fn oracle(alpha: f64, xmin: u64, terms: u64) -> f64 {
        let mut s = 0.0;
        for n in (0..terms).rev() {
            s += ((xmin + n) as f64).powf(-alpha);
        }
        let a = (xmin + terms) as f64;
        s + a.powf(1.0 - alpha) / (alpha - 1.0)
            + 0.5 * a.powf(-alpha)
            + alpha / 12.0 * a.powf(-alpha - 1.0)
    }

    #[test]
    fn basel_value() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        let v = hurwitz_zeta(2.0, 1).unwrap();
        assert!((v - pi2_6).abs() < 1e-13, "{v}");
        // the 10^7-term oracle agrees as well
        assert!((oracle(2.0, 1, 10_000_000) - pi2_6).abs() < 1e-12);
    }

    #[test]
    fn shifted_apery() {
        // ζ(3) - 1
        let expected = 1.202_056_903_159_594_3 - 1.0;
        let v = hurwitz_zeta(3.0, 2).unwrap();
        assert!((v - expected).abs() < 1e-14, "{v}");
        assert!((oracle(3.0, 2, 1_000_000) - expected).abs() < 1e-13);
    }

    #[test]
    fn standard_zeta_path_agrees() {
        assert_eq!(zeta(2.5).unwrap(), hurwitz_zeta(2.5, 1).unwrap());
    }

    #[test]
    fn log_form() {
        let v = log_hurwitz_zeta(2.0, 1).unwrap();
        let expected = (std::f64::consts::PI.powi(2) / 6.0).ln();
        assert!((v - expected).abs() < 1e-13);
        assert!((v - 0.49770).abs() < 1e-5);
        assert!(log_hurwitz_zeta(2.2, 1).unwrap() > 0.0);
        for &a in &[1.5, 2.0, 2.7, 3.0, 7.5] {
            for &x in &[1u64, 2, 9, 10, 55, 1000] {
                let z = hurwitz_zeta(a, x).unwrap();
                let l = log_hurwitz_zeta(a, x).unwrap();
                assert!((l.exp() / z - 1.0).abs() < 1e-12, "a={a} x={x}");
            }
        }
    }

    #[test]
    fn log_form_finite_at_huge_bound() {
        let l = log_hurwitz_zeta(50.0, 1_000_000_000).unwrap();
        assert!(l.is_finite());
        assert_eq!(hurwitz_zeta(50.0, 1_000_000_000).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(hurwitz_zeta(1.0, 1).is_err());
        assert!(hurwitz_zeta(1.0 + 1e-7, 1).is_err());
        assert!(hurwitz_zeta(0.5, 1).is_err());
        assert!(hurwitz_zeta(f64::NAN, 1).is_err());
        assert!(hurwitz_zeta(2.0, 0).is_err());
        assert!(log_hurwitz_zeta(2.0, 0).is_err());
        assert!(hurwitz_zeta(1.0 + 2e-6, 1).is_ok());
    }

    #[test]
    fn agrees_with_oracle_on_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let alpha = rng.random_range(1.5..3.0);
            let xmin = rng.random_range(1..=100u64);
            let v = hurwitz_zeta(alpha, xmin).unwrap();
            let o = oracle(alpha, xmin, 100_000);
            assert!((v - o).abs() < 1e-12, "alpha={alpha} xmin={xmin}: {v} vs {o}");
        }
    }

    #[test]
    fn cutoff_insensitive() {
        for &a in &[1.5, 1.8, 2.2, 2.6, 3.0] {
            for &x in &[1u64, 3, 17, 100] {
                let lo = hurwitz_zeta_with_cutoff(a, x, 10).unwrap();
                let hi = hurwitz_zeta_with_cutoff(a, x, 100).unwrap();
                assert!(((lo - hi) / hi).abs() < 1e-12, "a={a} x={x}");
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            hurwitz_zeta(2.345, 7).unwrap().to_bits(),
            hurwitz_zeta(2.345, 7).unwrap().to_bits()
        );
    }

    proptest! {
        #[test]
        fn decreasing_in_alpha(a in 1.01f64..6.0, da in 0.001f64..1.0, x in 1u64..500) {
            prop_assert!(hurwitz_zeta(a + da, x).unwrap() < hurwitz_zeta(a, x).unwrap());
        }

        #[test]
        fn decreasing_in_xmin(a in 1.01f64..6.0, x in 1u64..10_000) {
            let z0 = hurwitz_zeta(a, x).unwrap();
            let z1 = hurwitz_zeta(a, x + 1).unwrap();
            prop_assert!(z1 < z0 && z1 > 0.0 && z0.is_finite());
        }
    }
}
