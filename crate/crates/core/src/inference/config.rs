//! Prior specification, MCMC run settings and their stable hash.

use crate::error::{Error, Result};
use crate::measure::DEFAULT_TRUNCATION;
use crate::mixture::BaseMeasure;
use crate::prior::WeightProcessKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

/// Prior on the autocorrelation ψ ∈ (−1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiPrior {
    #[default]
    Uniform,
    /// (ψ + 1)/2 ~ Beta(a, b).
    ScaledBeta { a: f64, b: f64 },
}

impl PsiPrior {
    pub fn log_density(&self, psi: f64) -> f64 {
        if !(psi > -1.0 && psi < 1.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Uniform => -std::f64::consts::LN_2,
            Self::ScaledBeta { a, b } => {
                let u = 0.5 * (psi + 1.0);
                (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - ln_beta(a, b) - std::f64::consts::LN_2
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Uniform => Ok(()),
            Self::ScaledBeta { a, b } if a > 0.0 && b > 0.0 => Ok(()),
            Self::ScaledBeta { a, b } => Err(Error::Config(format!(
                "psi prior beta shapes must be positive, got ({a}, {b})"
            ))),
        }
    }
}

/// Gamma(shape, rate) prior on the total mass M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self {
            shape: 4.0,
            rate: 4.0,
        }
    }
}

impl GammaPrior {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln() - self.rate * x
    }
}

/// Everything that defines the model: weight process, priors on ψ and M,
/// the base measure, truncation level and the regression prior variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    #[serde(default)]
    pub process: WeightProcessKind,
    #[serde(default)]
    pub psi_prior: PsiPrior,
    #[serde(default)]
    pub mass_prior: GammaPrior,
    #[serde(default)]
    pub base: BaseMeasure,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    /// v0 in β_t ~ N(0, v0 I).
    #[serde(default = "default_regression_var")]
    pub regression_prior_var: f64,
}

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

fn default_regression_var() -> f64 {
    10.0
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            process: WeightProcessKind::Ar1Dp,
            psi_prior: PsiPrior::Uniform,
            mass_prior: GammaPrior::default(),
            base: BaseMeasure::default(),
            truncation: DEFAULT_TRUNCATION,
            regression_prior_var: 10.0,
        }
    }
}

impl PriorSpec {
    /// Settings of the simulation study: G0 with μ0 = 0, λ0 = 0.01, α = β = 2, unit kernel scale.
    pub fn simulation() -> Self {
        Self {
            base: BaseMeasure {
                mu0: 0.0,
                lambda0: 0.01,
                alpha: 2.0,
                beta: 2.0,
                kernel_scale: 1.0,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.psi_prior.validate()?;
        if !(self.mass_prior.shape > 0.0 && self.mass_prior.rate > 0.0) {
            return Err(Error::Config("mass prior shape and rate must be positive".into()));
        }
        if self.truncation < 2 {
            return Err(Error::Config(format!("truncation J must be >= 2, got {}", self.truncation)));
        }
        if !(self.regression_prior_var > 0.0 && self.regression_prior_var.is_finite()) {
            return Err(Error::Config("regression prior variance must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Ancestor resampling scheme inside conditional SMC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Resampling {
    #[default]
    Multinomial,
    Systematic,
}

/// How the conditional SMC step groups the J − 1 stick columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmcBlocking {
    /// One particle system per stick column. The ε posterior factorises over
    /// columns given the allocations, so this targets the same law.
    #[default]
    PerStick,
    /// One particle system whose particles carry all sticks of a time point.
    Joint,
}

/// Run-length, particle and proposal settings for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub num_particles: usize,
    #[serde(default = "default_psi_sd")]
    pub psi_proposal_sd: f64,
    #[serde(default = "default_mass_sd")]
    pub mass_proposal_sd: f64,
    /// Robbins–Monro tuning of the ψ proposal during burn-in only.
    #[serde(default)]
    pub adapt_psi_proposal: bool,
    #[serde(default)]
    pub resampling: Resampling,
    #[serde(default)]
    pub smc_blocking: SmcBlocking,
    /// Label-swap attempts of each kind per sweep; 0 turns the moves off.
    #[serde(default = "default_label_swaps")]
    pub label_swaps: usize,
    #[serde(default = "default_true")]
    pub update_mass: bool,
    /// Run particle propagation on the rayon pool. Results do not depend on it.
    #[serde(default)]
    pub parallel_particles: bool,
    pub seed: u64,
}

fn default_psi_sd() -> f64 {
    0.3
}

fn default_mass_sd() -> f64 {
    0.5
}

fn default_label_swaps() -> usize {
    5
}

fn default_true() -> bool {
    true
}

/// Acceptance rate targeted by the optional ψ-proposal adaptation.
pub const PSI_TARGET_ACCEPTANCE: f64 = 0.3;

impl McmcConfig {
    fn preset(iterations: usize, burn_in: usize, thin: usize) -> Self {
        Self {
            iterations,
            burn_in,
            thin,
            num_particles: 500,
            psi_proposal_sd: default_psi_sd(),
            mass_proposal_sd: default_mass_sd(),
            adapt_psi_proposal: false,
            resampling: Resampling::Multinomial,
            smc_blocking: SmcBlocking::PerStick,
            label_swaps: default_label_swaps(),
            update_mass: true,
            parallel_particles: false,
            seed: 1,
        }
    }

    /// 20,000 iterations, 10,000 burn-in, thin 10, R = 500.
    pub fn applications() -> Self {
        Self::preset(20_000, 10_000, 10)
    }

    /// 50,000 iterations, 25,000 burn-in, thin 10, R = 500.
    pub fn simulation() -> Self {
        Self::preset(50_000, 25_000, 10)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.num_particles < 2 {
            return Err(Error::Config(format!(
                "need at least 2 particles, got {}",
                self.num_particles
            )));
        }
        for (name, v) in [
            ("psi_proposal_sd", self.psi_proposal_sd),
            ("mass_proposal_sd", self.mass_proposal_sd),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Whether iteration `iter` (0-based) is recorded.
    pub fn keeps(&self, iter: usize) -> bool {
        iter >= self.burn_in && (iter + 1 - self.burn_in) % self.thin == 0
    }
}

/// 16 hex digits of the SHA-256 of a value's JSON form.
pub fn stable_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let text = serde_json::to_string(value).expect("value serialises to JSON");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Short hex digest identifying a (prior, config) pair.
pub fn config_hash(prior: &PriorSpec, config: &McmcConfig) -> String {
    stable_hash(&(prior, config))
}
