//! Discrete power laws observed through layered recording errors.
//!
//! The crate covers two routes to a power-law severity model:
//!
//! * [`csn`]: the frequentist pipeline. An approximate MLE for the scaling
//!   exponent, a Kolmogorov-Smirnov scan for the lower bound, bootstrap
//!   uncertainty and a semi-parametric goodness-of-fit test.
//! * [`inference`]: a Bayesian model over the whole support. True event
//!   sizes follow a power law (or a discretised log-normal). Each event is
//!   recorded with a size-dependent probability ([`error_model`]), recorded
//!   sizes carry truncated-Poisson counting noise, and some records are
//!   heaped onto multiples of five. A Metropolis-Hastings sampler explores
//!   the parameters jointly with the latent true sizes.
//!
//! [`predictive`] turns posterior draws into predictions for the number of
//! unrecorded events and the total severity. [`data`] handles CSV ingestion
//! and synthetic studies, and [`cli`] wires everything into the
//! `powerbayes` binary.
//!
//! Runnable walkthroughs of each capability live under `examples/`.

pub mod cli;
pub mod csn;
pub mod data;
pub mod distributions;
pub mod error;
pub mod error_model;
pub mod inference;
pub mod predictive;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
