//! Autoregressive Dirichlet process (AR1-DP) priors and mixture models.
//!
//! Stick variables are copula transforms of latent Gaussian AR(1) paths, so
//! every marginal random measure is a DP(M, G0) while the weights evolve
//! over time. Posterior inference uses blocked Gibbs sampling with
//! conditional SMC over the latent paths and a Metropolis update of the
//! autocorrelation.

pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod normal;
pub mod logspace;
pub mod measure;
pub mod mixture;
pub mod prior;
pub mod simdata;
pub mod summaries;

pub use error::{Error, Result};
