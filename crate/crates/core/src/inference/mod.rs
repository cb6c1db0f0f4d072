//! Bayesian inference for power-law severities seen through missingness,
//! counting noise and heaping.
//!
//! The unknowns are the model parameters of each force plus one latent true
//! count per recorded event. [`run_chain`] samples them jointly with a
//! Metropolis-Hastings scheme whose parameter proposal is usually tuned
//! first by [`pilot_tune`].

pub mod diagnostics;
pub mod io;
pub mod params;
pub mod posterior;
pub mod prior;
pub mod proposal;
pub mod sampler;
pub mod tune;

pub use diagnostics::{effective_sample_size, summarize, Summary};
pub use params::{Body, BodyKind, ForceParams, Link, ModelParams};
pub use posterior::{force_log_likelihood, log_posterior, ForceModel, Model};
pub use prior::{log_prior, PriorConfig};
pub use proposal::{propose_latents, propose_params, LatentProposal, ParamProposal, Proposal};
pub use sampler::{run_chain, run_chains, Chain, ChainState, Draw, LatentSnapshot, McmcConfig, PosteriorSample};
pub use tune::{conservative_sds, pilot_tune, TuneResult};

/// Pilot, then a main run started where the pilot ended.
pub fn tune_and_run(model: &Model, config: &McmcConfig, pilot_iterations: usize) -> crate::Result<(TuneResult, PosteriorSample)> {
    config.validate()?;
    let tuned = pilot_tune(model, config, pilot_iterations)?;
    let main = McmcConfig {
        proposal_cov: Some(tuned.proposal_cov.clone()),
        initial: Some(tuned.state.params.clone()),
        initial_latents: Some(tuned.state.latents.clone()),
        ..config.clone()
    };
    let sample = run_chain(model, &main)?;
    Ok((tuned, sample))
}
