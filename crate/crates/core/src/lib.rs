//! Bayesian parametric and Dirichlet-process-mixture IRT models for binary
//! responses, with the sampler strategy matrix, identifiability
//! post-processing, latent-density inference and ESS diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archive;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod identify;
pub mod inference;
pub mod model;
pub mod pipeline;
pub mod priors;
pub mod rng;
pub mod samplers;
pub mod sim;

pub use archive::SampleArchive;
pub use error::{Error, Result};
pub use model::{ItemParameters, ModelKind, ResponseMatrix};
pub use priors::Priors;
pub use samplers::{run_chain, ChainSettings, StrategyConfig};
