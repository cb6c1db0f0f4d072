//! Proposal kernels: a Gaussian random walk on the unconstrained parameter
//! coordinates, and truncated-Poisson moves on blocks of latent counts.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::params::ModelParams;
use crate::distributions::TruncatedPoisson;
use crate::{Error, Result};

/// Gaussian random-walk proposal over the transformed coordinates.
///
/// Coordinates whose variance is zero are held fixed; the Cholesky factor
/// covers the remaining ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    cov: DMatrix<f64>,
    free: Vec<usize>,
    chol: DMatrix<f64>,
}

impl Proposal {
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::config("proposal covariance must be square"));
        }
        let d = cov.nrows();
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (cov[(i, j)], cov[(j, i)]);
                if (a - b).abs() > 1e-12 * (a.abs() + b.abs() + 1e-300) {
                    return Err(Error::config("proposal covariance must be symmetric"));
                }
            }
            if !(cov[(i, i)] >= 0.0) {
                return Err(Error::config("proposal variances must be non-negative"));
            }
        }
        let free: Vec<usize> = (0..d).filter(|&i| cov[(i, i)] > 0.0).collect();
        for i in 0..d {
            if cov[(i, i)] == 0.0 && (0..d).any(|j| cov[(i, j)] != 0.0) {
                return Err(Error::config("a fixed coordinate cannot have nonzero covariance"));
            }
        }
        let sub = DMatrix::from_fn(free.len(), free.len(), |i, j| cov[(free[i], free[j])]);
        let chol = if free.is_empty() {
            sub
        } else {
            sub.cholesky()
                .ok_or_else(|| Error::config("proposal covariance must be positive definite"))?
                .l()
        };
        Ok(Self { cov, free, chol })
    }

    pub fn diagonal(sds: &[f64]) -> Result<Self> {
        let v: Vec<f64> = sds.iter().map(|s| s * s).collect();
        Self::new(DMatrix::from_diagonal(&DVector::from_vec(v)))
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Indices of coordinates that move.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Gaussian step from `t`; fixed coordinates are copied unchanged.
    pub fn step<R: Rng + ?Sized>(&self, t: &[f64], rng: &mut R) -> Vec<f64> {
        let mut out = t.to_vec();
        if self.free.is_empty() {
            return out;
        }
        let eps = DVector::from_fn(self.free.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = &self.chol * eps;
        for (k, &i) in self.free.iter().enumerate() {
            out[i] += step[k];
        }
        out
    }

    /// Log density of moving from `from` to `to`, over the free coordinates.
    pub fn log_density(&self, from: &[f64], to: &[f64]) -> f64 {
        let k = self.free.len();
        let diff = DVector::from_fn(k, |i, _| to[self.free[i]] - from[self.free[i]]);
        let y = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        let ln_det: f64 = (0..k).map(|i| self.chol[(i, i)].ln()).sum();
        -0.5 * y.norm_squared() - ln_det - 0.5 * k as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// A proposed parameter set with `ln |J(θ*)| - ln |J(θ)|` for the change of
/// variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamProposal {
    pub params: ModelParams,
    pub log_jacobian: f64,
    /// Per force, whether any of its coordinates moved.
    pub changed: Vec<bool>,
}

/// Random-walk step in transformed space. Natural values of unmoved
/// coordinates are carried over exactly.
pub fn propose_params<R: Rng + ?Sized>(current: &ModelParams, proposal: &Proposal, rng: &mut R) -> ParamProposal {
    let layout = current.layout();
    let t = current.transformed();
    let t_star = proposal.step(&t, rng);
    let mut values = current.values();
    let mut log_jacobian = 0.0;
    let mut moved = vec![false; t.len()];
    for &i in proposal.free() {
        if t_star[i] != t[i] {
            let link = layout[i].1;
            values[i] = link.inverse(t_star[i]);
            log_jacobian += link.ln_jacobian(t_star[i]) - link.ln_jacobian(t[i]);
            moved[i] = true;
        }
    }
    let changed = (0..current.forces.len())
        .map(|f| current.force_range(f).any(|i| moved[i]))
        .collect();
    ParamProposal {
        params: current.with_values(&values),
        log_jacobian,
        changed,
    }
}

/// A block move on latent counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentProposal {
    pub indices: Vec<usize>,
    pub values: Vec<u64>,
    /// `ln q(x* | x)`
    pub log_q_forward: f64,
    /// `ln q(x | x*)`
    pub log_q_backward: f64,
}

impl LatentProposal {
    /// `latents` with the block applied.
    pub fn apply(&self, latents: &[u64]) -> Vec<u64> {
        let mut out = latents.to_vec();
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

/// Pick `block_size` distinct indices and redraw each from `TP(x_i)`.
pub fn propose_latents<R: Rng + ?Sized>(latents: &[u64], block_size: usize, rng: &mut R) -> LatentProposal {
    let k = block_size.min(latents.len());
    let indices = rand::seq::index::sample(rng, latents.len(), k).into_vec();
    let mut values = Vec::with_capacity(k);
    let mut log_q_forward = 0.0;
    let mut log_q_backward = 0.0;
    for &i in &indices {
        let x = latents[i];
        let fwd = TruncatedPoisson::new(x as f64).expect("latents are positive");
        let x_star = fwd.sample(rng);
        let back = TruncatedPoisson::new(x_star as f64).expect("truncated Poisson draws are positive");
        log_q_forward += fwd.ln_pmf_unchecked(x_star);
        log_q_backward += back.ln_pmf_unchecked(x);
        values.push(x_star);
    }
    LatentProposal {
        indices,
        values,
        log_q_forward,
        log_q_backward,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Side;
    use crate::error_model::ObservationModel;
    use crate::inference::params::{Body, ForceParams};

    fn params() -> ModelParams {
        ModelParams {
            forces: vec![ForceParams {
                side: Side::Native,
                body: Body::PowerLaw { alpha: 2.2 },
                obs: ObservationModel::exponential_linear(0.007, 0.05).unwrap(),
                p: 0.19,
            }],
        }
    }

    #[test]
    fn zero_covariance_is_identity() {
        let prop = Proposal::new(DMatrix::zeros(4, 4)).unwrap();
        let mut rng = crate::rng::stream(1, 0);
        let p = params();
        let out = propose_params(&p, &prop, &mut rng);
        assert_eq!(out.params, p);
        assert_eq!(out.log_jacobian, 0.0);
        assert_eq!(out.changed, vec![false]);
    }

    #[test]
    fn step_sd_matches_diagonal() {
        let sds = [0.1, 0.5, 0.02, 1.5];
        let prop = Proposal::diagonal(&sds).unwrap();
        let mut rng = crate::rng::stream(2, 0);
        let n = 100_000;
        let mut sq = [0.0; 4];
        let mut sum = [0.0; 4];
        let t0 = [0.0; 4];
        for _ in 0..n {
            let t = prop.step(&t0, &mut rng);
            for i in 0..4 {
                sum[i] += t[i];
                sq[i] += t[i] * t[i];
            }
        }
        for i in 0..4 {
            let mean = sum[i] / n as f64;
            let sd = (sq[i] / n as f64 - mean * mean).sqrt();
            // sd of the sample sd is about sd / sqrt(2n)
            assert!((sd - sds[i]).abs() < 5.0 * sds[i] / (2.0 * n as f64).sqrt(), "{i}: {sd}");
        }
    }

    #[test]
    fn correlated_step_and_symmetry() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
        let prop = Proposal::new(cov).unwrap();
        let mut rng = crate::rng::stream(3, 0);
        let n = 50_000;
        let mut cross = 0.0;
        for _ in 0..n {
            let t = prop.step(&[0.0, 0.0], &mut rng);
            cross += t[0] * t[1];
        }
        assert!((cross / n as f64 - 0.8).abs() < 0.03);
        let a = [0.3, -1.0];
        let b = [1.1, 0.4];
        assert!((prop.log_density(&a, &b) - prop.log_density(&b, &a)).abs() < 1e-14);
        // standard bivariate normal check at the origin
        let at0 = prop.log_density(&[0.0, 0.0], &[0.0, 0.0]);
        let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * (1.0f64 - 0.64).ln();
        assert!((at0 - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_covariance() {
        assert!(Proposal::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(Proposal::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0])).is_err());
        assert!(Proposal::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 0.0])).is_err());
        assert!(Proposal::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).is_ok());
    }

    #[test]
    fn fixed_coordinates_keep_exact_values() {
        let mut p = params();
        p.forces[0].p = 0.0;
        let prop = Proposal::diagonal(&[0.1, 0.1, 0.0, 0.0]).unwrap();
        let mut rng = crate::rng::stream(4, 0);
        for _ in 0..100 {
            let out = propose_params(&p, &prop, &mut rng);
            assert_eq!(out.params.forces[0].p, 0.0);
            assert_eq!(out.params.forces[0].obs.mu, 0.05);
            assert!(out.log_jacobian.is_finite());
        }
    }

    #[test]
    fn latent_block_at_one() {
        // Pr(x* = 1 | x = 1) = e^{-1} / (1 - e^{-1})
        let expected = (-1.0f64).exp() / (1.0 - (-1.0f64).exp());
        let mut rng = crate::rng::stream(5, 0);
        let n = 200_000;
        let mut ones = 0;
        for _ in 0..n {
            let prop = propose_latents(&[1], 1, &mut rng);
            if prop.values[0] == 1 {
                ones += 1;
                assert!((prop.log_q_forward - expected.ln()).abs() < 1e-12);
            }
        }
        let frac = ones as f64 / n as f64;
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((frac - expected).abs() < 4.0 * se, "{frac}");
    }

    #[test]
    fn latent_kernel_is_asymmetric() {
        let a = crate::distributions::truncated_poisson_log_pmf(5, 1.0).unwrap();
        let b = crate::distributions::truncated_poisson_log_pmf(1, 5.0).unwrap();
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn latent_block_touches_only_selected() {
        let x: Vec<u64> = (1..=50).collect();
        let mut rng = crate::rng::stream(6, 0);
        let prop = propose_latents(&x, 10, &mut rng);
        assert_eq!(prop.indices.len(), 10);
        let mut sorted = prop.indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);
        let y = prop.apply(&x);
        for i in 0..50 {
            if !prop.indices.contains(&i) {
                assert_eq!(x[i], y[i]);
            }
        }
        let fwd: f64 = prop
            .indices
            .iter()
            .zip(&prop.values)
            .map(|(&i, &v)| crate::distributions::truncated_poisson_log_pmf(v, x[i] as f64).unwrap())
            .sum();
        let back: f64 = prop
            .indices
            .iter()
            .zip(&prop.values)
            .map(|(&i, &v)| crate::distributions::truncated_poisson_log_pmf(x[i], v as f64).unwrap())
            .sum();
        assert!((fwd - prop.log_q_forward).abs() < 1e-9);
        assert!((back - prop.log_q_backward).abs() < 1e-9);
    }
}
