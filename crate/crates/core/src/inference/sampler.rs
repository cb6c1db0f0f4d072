//! Metropolis-Hastings over parameters and latent true counts.
//!
//! Each iteration proposes new parameters for every force together with a
//! block of latent counts for one force (forces take turns), and accepts or
//! rejects the pair with a single ratio.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::diagnostics::effective_sample_size;
use super::params::ModelParams;
use super::posterior::{heap_terms, log_posterior, ForceTerms, Model};
use super::prior::log_prior;
use super::proposal::{propose_latents, propose_params, Proposal};
use crate::data::Side;
use crate::error_model::HeapTerms;
use crate::{Error, Result};

/// Sampler settings.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Latent counts perturbed per iteration; capped at each force's `n_obs`.
    pub latent_block_size: usize,
    /// Over the transformed coordinates; `None` uses [`conservative_sds`].
    ///
    /// [`conservative_sds`]: super::tune::conservative_sds
    pub proposal_cov: Option<DMatrix<f64>>,
    pub seed: u64,
    /// Keep the full latent vector every `latent_stride` kept draws; 0 keeps none.
    pub latent_stride: usize,
    /// Recompute the cached log posterior from scratch this often; 0 disables.
    pub audit_every: usize,
    /// Log progress this often; 0 disables.
    pub progress_every: usize,
    pub initial: Option<ModelParams>,
    pub initial_latents: Option<Vec<Vec<u64>>>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 1_100_000,
            burn_in: 100_000,
            thin: 100,
            latent_block_size: 10,
            proposal_cov: None,
            seed: 0,
            latent_stride: 0,
            audit_every: 10_000,
            progress_every: 100_000,
            initial: None,
            initial_latents: None,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin < 1 {
            return Err(Error::config("thin must be at least 1"));
        }
        if self.latent_block_size < 1 {
            return Err(Error::config("latent block size must be at least 1"));
        }
        Ok(())
    }

    /// Number of draws kept: `(iterations - burn_in) / thin`.
    pub fn n_kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Parameters, latent counts and the cached log posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub params: ModelParams,
    pub latents: Vec<Vec<u64>>,
    pub log_posterior: f64,
}

/// A live chain with per-force caches.
pub struct Chain<'a> {
    model: &'a Model,
    proposal: Proposal,
    block: usize,
    state: ChainState,
    terms: Vec<ForceTerms>,
    heap: Vec<Vec<HeapTerms>>,
    ll: Vec<f64>,
    ln_prior: f64,
    steps: u64,
    accepted: u64,
    /// Latent block displaced by the pending proposal.
    saved: Vec<(u64, HeapTerms)>,
}

impl<'a> Chain<'a> {
    pub fn new(
        model: &'a Model,
        proposal: Proposal,
        params: ModelParams,
        latents: Vec<Vec<u64>>,
        block: usize,
    ) -> Result<Self> {
        model.check_state(&params, &latents)?;
        if proposal.dim() != params.dim() {
            return Err(Error::config(format!(
                "proposal covariance is {}x{}, the model has {} coordinates",
                proposal.dim(),
                proposal.dim(),
                params.dim()
            )));
        }
        let ln_prior = log_prior(&params, &model.prior);
        let mut terms = Vec::new();
        let mut heap = Vec::new();
        let mut ll = Vec::new();
        for ((f, p), x) in model.forces.iter().zip(&params.forces).zip(&latents) {
            let t = ForceTerms::new(p)
                .ok_or_else(|| Error::config(format!("initial parameters for {} are outside the model domain", f.side)))?;
            let h = heap_terms(&f.z, x);
            ll.push(t.log_likelihood(x, &h));
            terms.push(t);
            heap.push(h);
        }
        let lp = ln_prior + ll.iter().sum::<f64>();
        if !lp.is_finite() {
            return Err(Error::config("initial state has zero posterior density"));
        }
        Ok(Self {
            model,
            proposal,
            block: block.max(1),
            state: ChainState {
                params,
                latents,
                log_posterior: lp,
            },
            terms,
            heap,
            ll,
            ln_prior,
            steps: 0,
            accepted: 0,
            saved: Vec::new(),
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }

    pub fn proposal(&self) -> &Proposal {
        &self.proposal
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    /// One joint Metropolis-Hastings step. Returns whether it was accepted.
    pub fn mh_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let n_forces = self.model.forces.len();
        let f = (self.steps % n_forces as u64) as usize;
        self.steps += 1;

        let pp = propose_params(&self.state.params, &self.proposal, rng);
        let block = self.block.min(self.state.latents[f].len());
        let lat = propose_latents(&self.state.latents[f], block, rng);
        let ln_u = rng.random::<f64>().ln();

        let any_changed = pp.changed.iter().any(|&c| c);
        let prior_star = if any_changed {
            log_prior(&pp.params, &self.model.prior)
        } else {
            self.ln_prior
        };
        if prior_star == f64::NEG_INFINITY {
            return false;
        }
        let mut new_terms: Vec<Option<ForceTerms>> = Vec::with_capacity(n_forces);
        for (g, &changed) in pp.changed.iter().enumerate() {
            if changed {
                match ForceTerms::new(&pp.params.forces[g]) {
                    Some(t) => new_terms.push(Some(t)),
                    None => return false,
                }
            } else {
                new_terms.push(None);
            }
        }

        let z = &self.model.forces[f].z;
        let new_heap: Vec<HeapTerms> = lat
            .indices
            .iter()
            .zip(&lat.values)
            .map(|(&i, &v)| HeapTerms::new(z[i], v))
            .collect();

        let mut ll_star = self.ll.clone();
        let mut swapped = false;
        if let Some(t) = &new_terms[f] {
            self.swap_block(f, &lat.indices, &lat.values, &new_heap);
            swapped = true;
            ll_star[f] = t.log_likelihood(&self.state.latents[f], &self.heap[f]);
        } else {
            let t = &self.terms[f];
            let x = &self.state.latents[f];
            let h = &self.heap[f];
            let mut delta = 0.0;
            for (k, &i) in lat.indices.iter().enumerate() {
                delta += t.term(lat.values[k], &new_heap[k]) - t.term(x[i], &h[i]);
            }
            ll_star[f] = self.ll[f] + delta;
        }
        for g in 0..n_forces {
            if g != f {
                if let Some(t) = &new_terms[g] {
                    ll_star[g] = t.log_likelihood(&self.state.latents[g], &self.heap[g]);
                }
            }
        }

        let lp_star = prior_star + ll_star.iter().sum::<f64>();
        let ratio = lp_star - self.state.log_posterior + lat.log_q_backward - lat.log_q_forward + pp.log_jacobian;
        let accept = lp_star > f64::NEG_INFINITY && ln_u < ratio;
        if accept {
            if !swapped {
                self.swap_block(f, &lat.indices, &lat.values, &new_heap);
            }
            for (g, t) in new_terms.into_iter().enumerate() {
                if let Some(t) = t {
                    self.terms[g] = t;
                }
            }
            self.state.params = pp.params;
            self.ll = ll_star;
            self.ln_prior = prior_star;
            self.state.log_posterior = lp_star;
            self.accepted += 1;
        } else if swapped {
            self.restore_block(f, &lat.indices);
        }
        accept
    }

    fn swap_block(&mut self, f: usize, indices: &[usize], values: &[u64], heap: &[HeapTerms]) {
        self.saved.clear();
        for (k, &i) in indices.iter().enumerate() {
            self.saved.push((self.state.latents[f][i], self.heap[f][i]));
            self.state.latents[f][i] = values[k];
            self.heap[f][i] = heap[k];
        }
    }

    fn restore_block(&mut self, f: usize, indices: &[usize]) {
        for (k, &i) in indices.iter().enumerate() {
            let (x, h) = self.saved[k];
            self.state.latents[f][i] = x;
            self.heap[f][i] = h;
        }
    }

    /// Compare the cached log posterior with a fresh evaluation and resync.
    pub fn audit(&mut self) -> Result<f64> {
        let fresh = log_posterior(self.model, &self.state.params, &self.state.latents);
        let diff = (fresh - self.state.log_posterior).abs();
        if !(diff < 1e-6) {
            return Err(Error::Numerical(format!(
                "cached log posterior {} drifted from fresh value {fresh}",
                self.state.log_posterior
            )));
        }
        for (g, f) in self.model.forces.iter().enumerate() {
            self.heap[g] = heap_terms(&f.z, &self.state.latents[g]);
            self.ll[g] = self.terms[g].log_likelihood(&self.state.latents[g], &self.heap[g]);
        }
        self.state.log_posterior = self.ln_prior + self.ll.iter().sum::<f64>();
        Ok(diff)
    }
}

/// One kept iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub iteration: usize,
    pub params: ModelParams,
    pub log_posterior: f64,
    /// `Σ x_i` per force, in model order.
    pub latent_sums: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentSnapshot {
    pub iteration: usize,
    pub latents: Vec<Vec<u64>>,
}

/// Output of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub sides: Vec<Side>,
    pub names: Vec<String>,
    pub draws: Vec<Draw>,
    pub latent_snapshots: Vec<LatentSnapshot>,
    pub acceptance_rate: f64,
    /// Per parameter, in `names` order; `None` for parameters that never moved.
    pub ess: Vec<Option<f64>>,
    pub final_state: ChainState,
    pub proposal_cov: DMatrix<f64>,
}

impl PosteriorSample {
    /// Natural-scale values of a named parameter across draws.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.draws.iter().map(|d| d.params.values()[j]).collect())
    }

    /// Latent sums for one side across draws.
    pub fn latent_sums(&self, side: Side) -> Option<Vec<u64>> {
        let j = self.sides.iter().position(|s| *s == side)?;
        Some(self.draws.iter().map(|d| d.latent_sums[j]).collect())
    }

    pub fn log_posteriors(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.log_posterior).collect()
    }
}

/// Per-parameter ESS over kept draws.
pub fn parameter_ess(names: &[String], draws: &[Draw]) -> Vec<Option<f64>> {
    let values: Vec<Vec<f64>> = draws.iter().map(|d| d.params.values()).collect();
    (0..names.len())
        .map(|j| {
            let series: Vec<f64> = values.iter().map(|v| v[j]).collect();
            effective_sample_size(&series).ok()
        })
        .collect()
}

pub(crate) fn starting_point(model: &Model, config: &McmcConfig) -> (ModelParams, Vec<Vec<u64>>) {
    let params = config.initial.clone().unwrap_or_else(|| model.default_initial());
    let latents = config
        .initial_latents
        .clone()
        .unwrap_or_else(|| model.forces.iter().map(|f| f.z.clone()).collect());
    (params, latents)
}

pub(crate) fn proposal_for(config: &McmcConfig, params: &ModelParams) -> Result<Proposal> {
    match &config.proposal_cov {
        Some(c) => Proposal::new(c.clone()),
        None => Proposal::diagonal(&super::tune::conservative_sds(params)),
    }
}

/// Run a chain: `iterations` steps, drop `burn_in`, keep every `thin`-th.
pub fn run_chain(model: &Model, config: &McmcConfig) -> Result<PosteriorSample> {
    config.validate()?;
    model.validate()?;
    let (params, latents) = starting_point(model, config);
    let proposal = proposal_for(config, &params)?;
    let names = params.names();
    let mut chain = Chain::new(model, proposal, params, latents, config.latent_block_size)?;
    let mut rng = crate::rng::stream(config.seed, 0);

    let mut draws = Vec::with_capacity(config.n_kept());
    let mut latent_snapshots = Vec::new();
    for i in 1..=config.iterations {
        chain.mh_step(&mut rng);
        if config.audit_every > 0 && i % config.audit_every == 0 {
            chain.audit()?;
        }
        if config.progress_every > 0 && i % config.progress_every == 0 {
            log::info!(
                "seed {}: iteration {i}/{}, acceptance {:.3}, log posterior {:.2}",
                config.seed,
                config.iterations,
                chain.acceptance_rate(),
                chain.state().log_posterior
            );
        }
        if i > config.burn_in && (i - config.burn_in) % config.thin == 0 {
            let s = chain.state();
            if config.latent_stride > 0 && draws.len() % config.latent_stride == 0 {
                latent_snapshots.push(LatentSnapshot {
                    iteration: i,
                    latents: s.latents.clone(),
                });
            }
            draws.push(Draw {
                iteration: i,
                params: s.params.clone(),
                log_posterior: s.log_posterior,
                latent_sums: s.latents.iter().map(|x| x.iter().sum()).collect(),
            });
        }
    }
    let ess = parameter_ess(&names, &draws);
    let acceptance_rate = chain.acceptance_rate();
    let proposal_cov = chain.proposal().cov().clone();
    Ok(PosteriorSample {
        sides: model.forces.iter().map(|f| f.side).collect(),
        names,
        draws,
        latent_snapshots,
        acceptance_rate,
        ess,
        final_state: chain.into_state(),
        proposal_cov,
    })
}

/// Independent chains with seeds derived from `config.seed`, run in parallel.
pub fn run_chains(model: &Model, config: &McmcConfig, n_chains: usize) -> Result<Vec<PosteriorSample>> {
    (0..n_chains as u64)
        .into_par_iter()
        .map(|k| {
            let mut c = config.clone();
            c.seed = crate::rng::derive_seed(config.seed, k);
            run_chain(model, &c)
        })
        .collect()
}
