//! Pilot-run tuning of the parameter proposal.
//!
//! The pilot starts from a small diagonal proposal and refines it in three
//! stages (a quarter, a quarter, then half of the pilot budget). After each
//! stage the covariance of the second half of that stage's transformed
//! draws, scaled by `2.38² / d`, becomes the next proposal. The main run
//! never adapts.

use nalgebra::DMatrix;

use super::params::{Link, ModelParams};
use super::posterior::Model;
use super::proposal::Proposal;
use super::sampler::{proposal_for, starting_point, Chain, ChainState, McmcConfig};
use crate::{Error, Result};

/// Smallest pilot the tuner accepts.
pub const MIN_PILOT: usize = 10_000;

/// Step sizes of the untuned proposal, by coordinate.
pub fn conservative_sds(params: &ModelParams) -> Vec<f64> {
    params
        .layout()
        .iter()
        .map(|(name, link)| {
            let base = name.split('_').next().unwrap_or("");
            match (base, link) {
                ("alpha", _) => 0.02,
                ("meanlog", _) => 0.05,
                ("sdlog", _) => 0.05,
                ("lambda", _) => 0.1,
                ("mu", _) => 0.05,
                ("eta", _) => 0.1,
                ("p", _) => 0.1,
                (_, Link::Identity) => 0.02,
                _ => 0.05,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub proposal_cov: DMatrix<f64>,
    /// True when the conservative diagonal is returned unchanged.
    pub fallback: bool,
    pub note: String,
    pub pilot_acceptance: f64,
    /// Where the pilot ended; a good start for the main run.
    pub state: ChainState,
}

/// `2.38²/d` times the sample covariance of the free coordinates, embedded
/// back into the full dimension. `None` unless positive definite.
fn scaled_covariance(samples: &[Vec<f64>], free: &[usize], dim: usize) -> Option<DMatrix<f64>> {
    let k = free.len();
    let n = samples.len();
    if k == 0 || n < 2 * k + 2 {
        return None;
    }
    let mut mean = vec![0.0; k];
    for s in samples {
        for (a, &i) in free.iter().enumerate() {
            mean[a] += s[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::zeros(k, k);
    for s in samples {
        for a in 0..k {
            let da = s[free[a]] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += da * (s[free[b]] - mean[b]);
            }
        }
    }
    for a in 0..k {
        for b in 0..=a {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let scale = 2.38f64.powi(2) / k as f64;
    cov *= scale;
    if !cov.iter().all(|v| v.is_finite()) || cov.clone().cholesky().is_none() {
        return None;
    }
    let mut full = DMatrix::zeros(dim, dim);
    for a in 0..k {
        for b in 0..k {
            full[(free[a], free[b])] = cov[(a, b)];
        }
    }
    Some(full)
}

/// Tune the proposal covariance with a pilot of `pilot_iterations` steps.
///
/// `config` supplies the seed, block size, start and the conservative
/// proposal (its zero-variance coordinates stay fixed). The pilot draws from
/// its own stream so it never overlaps the main run.
pub fn pilot_tune(model: &Model, config: &McmcConfig, pilot_iterations: usize) -> Result<TuneResult> {
    if pilot_iterations < MIN_PILOT {
        return Err(Error::config(format!("pilot needs at least {MIN_PILOT} iterations")));
    }
    if config.latent_block_size < 1 {
        return Err(Error::config("latent block size must be at least 1"));
    }
    model.validate()?;
    let (params, latents) = starting_point(model, config);
    let base = proposal_for(config, &params)?;
    let dim = base.dim();
    let free = base.free().to_vec();

    let degenerate = model.forces.iter().find(|f| {
        let first = f.z[0];
        f.z.iter().all(|&z| z == first)
    });
    if let Some(f) = degenerate {
        let chain = Chain::new(model, base.clone(), params, latents, config.latent_block_size)?;
        return Ok(TuneResult {
            proposal_cov: base.cov().clone(),
            fallback: true,
            note: format!("fewer than two distinct counts for {}; kept the conservative proposal", f.side),
            pilot_acceptance: 0.0,
            state: chain.into_state(),
        });
    }

    let mut rng = crate::rng::stream(config.seed, 1);
    let stages = [pilot_iterations / 4, pilot_iterations / 4, pilot_iterations - 2 * (pilot_iterations / 4)];
    let mut current = base.clone();
    let mut tuned = false;
    let mut state = (params, latents);
    let mut total_accepted = 0u64;
    let mut note = String::new();
    for (s, &len) in stages.iter().enumerate() {
        let mut chain = Chain::new(model, current.clone(), state.0, state.1, config.latent_block_size)?;
        let mut kept = Vec::with_capacity(len / 2 + 1);
        let mut accepted_late = 0usize;
        for i in 0..len {
            let acc = chain.mh_step(&mut rng);
            if i >= len / 2 {
                kept.push(chain.state().params.transformed());
                accepted_late += acc as usize;
            }
            if config.audit_every > 0 && (i + 1) % config.audit_every == 0 {
                chain.audit()?;
            }
        }
        total_accepted += chain.accepted();
        log::info!("pilot stage {}: acceptance {:.3}", s + 1, chain.acceptance_rate());
        let estimate = if accepted_late >= 2 * free.len() + 2 {
            scaled_covariance(&kept, &free, dim)
        } else {
            None
        };
        match estimate.map(Proposal::new) {
            Some(Ok(p)) => {
                current = p;
                tuned = true;
            }
            _ => {
                note = format!("stage {} covariance unusable; kept the previous proposal", s + 1);
            }
        }
        let st = chain.into_state();
        state = (st.params, st.latents);
    }
    let pilot_acceptance = total_accepted as f64 / pilot_iterations as f64;
    let final_chain = Chain::new(model, current.clone(), state.0, state.1, config.latent_block_size)?;
    if !tuned {
        note = "pilot covariance never positive definite; kept the conservative proposal".into();
    }
    Ok(TuneResult {
        proposal_cov: current.cov().clone(),
        fallback: !tuned,
        note,
        pilot_acceptance,
        state: final_chain.into_state(),
    })
}
