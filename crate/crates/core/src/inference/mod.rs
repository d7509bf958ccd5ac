//! Posterior inference: blocked Gibbs with conditional SMC over the latent
//! ε-paths, a PMMH step for ψ, a random-walk step for M and label-swap moves.

pub mod config;
pub mod relabel;
pub mod sampler;
pub mod smc;
pub mod updates;

pub use config::{config_hash, stable_hash, GammaPrior, McmcConfig, PriorSpec, PsiPrior, Resampling, SmcBlocking};
pub use relabel::{label_swap_moves, SwapCounts};
pub use sampler::{run_mcmc, run_mcmc_with_progress, ChainState, Draw, Provenance, Sampler, SweepInfo, Trace};
pub use smc::{
    conditional_smc, conditional_smc_stickwise, multinomial_resample, smc_marginal_likelihood, systematic_resample, ParticleSystem,
    SmcOutput, SmcSettings, StickCounts, StickwiseOutput,
};
pub use updates::{pmmh_update_psi, update_mass, MhStep};
