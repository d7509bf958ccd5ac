//! Metropolis–Hastings updates for ψ (particle-marginal step) and the mass M.

use super::config::{GammaPrior, PsiPrior};
use super::smc::StickCounts;
use crate::error::{Error, Result};
use crate::normal;
use crate::prior::{path_log_density, Ar1Params, EpsPath};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Result of one Metropolis–Hastings step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhStep {
    pub value: f64,
    pub accepted: bool,
}

/// log of the mass of N(centre, sd²) on (−1, 1).
fn log_truncation_mass(centre: f64, sd: f64) -> f64 {
    let hi = (1.0 - centre) / sd;
    let lo = (-1.0 - centre) / sd;
    // Φ(hi) − Φ(lo), computed on whichever side keeps precision.
    let mass = if lo > 0.0 {
        normal::cdf(-lo) - normal::cdf(-hi)
    } else {
        normal::cdf(hi) - normal::cdf(lo)
    };
    mass.max(f64::MIN_POSITIVE).ln()
}

/// Draws ψ* from N(ψ, sd²) truncated to (−1, 1).
pub fn truncated_normal_proposal<R: Rng + ?Sized>(psi: f64, sd: f64, rng: &mut R) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let cand = psi + sd * z;
        if cand > -1.0 && cand < 1.0 {
            return cand;
        }
    }
}

/// log acceptance ratio of the ψ move ψ → ψ* with the ε-path held fixed.
///
/// The Gaussian kernels of the truncated proposal cancel by symmetry, leaving
/// only the ratio of truncation constants.
pub fn pmmh_log_ratio(psi: f64, psi_star: f64, eps: &EpsPath, prior: &PsiPrior, sd: f64) -> Result<f64> {
    let cur = Ar1Params::new(psi)?;
    let prop = Ar1Params::new(psi_star)?;
    let prior_term = prior.log_density(psi_star) - prior.log_density(psi);
    let lik_term = path_log_density(eps, prop) - path_log_density(eps, cur);
    let proposal_term = log_truncation_mass(psi, sd) - log_truncation_mass(psi_star, sd);
    Ok(prior_term + lik_term + proposal_term)
}

/// One PMMH accept/reject step for ψ given the current ε-path.
pub fn pmmh_update_psi<R: Rng + ?Sized>(
    psi: f64,
    eps: &EpsPath,
    prior: &PsiPrior,
    sd: f64,
    rng: &mut R,
) -> Result<MhStep> {
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::Config(format!("psi proposal sd must be positive, got {sd}")));
    }
    let psi_star = truncated_normal_proposal(psi, sd, rng);
    let log_ratio = pmmh_log_ratio(psi, psi_star, eps, prior, sd)?;
    Ok(accept_or_keep(psi, psi_star, log_ratio, rng))
}

/// log acceptance ratio of M → M* under a log-scale random walk.
pub fn mass_log_ratio(mass: f64, mass_star: f64, eps: &EpsPath, counts: &StickCounts, prior: &GammaPrior) -> f64 {
    prior.log_density(mass_star) - prior.log_density(mass) + counts.path_log_likelihood(eps, mass_star)
        - counts.path_log_likelihood(eps, mass)
        + (mass_star / mass).ln()
}

/// Random-walk Metropolis–Hastings step on log M.
pub fn update_mass<R: Rng + ?Sized>(
    mass: f64,
    eps: &EpsPath,
    counts: &StickCounts,
    prior: &GammaPrior,
    sd: f64,
    rng: &mut R,
) -> Result<MhStep> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Numerical(format!("mass must be positive, got {mass}")));
    }
    let z: f64 = StandardNormal.sample(rng);
    let mass_star = mass * (sd * z).exp();
    if !(mass_star > 0.0 && mass_star.is_finite()) {
        return Ok(MhStep {
            value: mass,
            accepted: false,
        });
    }
    let log_ratio = mass_log_ratio(mass, mass_star, eps, counts, prior);
    Ok(accept_or_keep(mass, mass_star, log_ratio, rng))
}

fn accept_or_keep<R: Rng + ?Sized>(current: f64, proposal: f64, log_ratio: f64, rng: &mut R) -> MhStep {
    let u: f64 = rng.gen();
    if log_ratio >= 0.0 || u.ln() < log_ratio {
        MhStep {
            value: proposal,
            accepted: true,
        }
    } else {
        MhStep {
            value: current,
            accepted: false,
        }
    }
}
