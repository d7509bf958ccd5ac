//! Run configuration file (TOML). Every field except `data` is optional; the
//! resolved form written next to the outputs has every value filled in and is
//! itself a valid configuration file.

use crate::error::{CliError, CliResult};
use ar1dp::inference::{config_hash, GammaPrior, McmcConfig, PriorSpec, PsiPrior, Resampling, SmcBlocking};
use ar1dp::mixture::BaseMeasure;
use ar1dp::prior::WeightProcessKind;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Named starting points for the base measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelDefaults {
    /// μ0 = 0, λ0 = 0.01, α = 2, β = 1, λ = 1.
    #[default]
    Applications,
    /// As applications with β = 2.
    Simulation,
    /// As applications with kernel scale λ = 0.1.
    Covariates,
}

/// Named run-length presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum McmcPreset {
    /// 20,000 iterations, 10,000 burn-in, thin 10.
    #[default]
    Applications,
    /// 50,000 iterations, 25,000 burn-in, thin 10.
    Simulation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub defaults: Option<ModelDefaults>,
    pub mu0: Option<f64>,
    pub lambda0: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub kernel_scale: Option<f64>,
    /// Covariate column names in the data file.
    pub covariates: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBlock {
    pub process: Option<WeightProcessKind>,
    pub psi_prior: Option<PsiPrior>,
    pub mass_shape: Option<f64>,
    pub mass_rate: Option<f64>,
    pub truncation: Option<usize>,
    pub regression_prior_var: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcBlock {
    pub preset: Option<McmcPreset>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub num_particles: Option<usize>,
    pub psi_proposal_sd: Option<f64>,
    pub mass_proposal_sd: Option<f64>,
    pub adapt_psi_proposal: Option<bool>,
    pub resampling: Option<Resampling>,
    pub smc_blocking: Option<SmcBlocking>,
    pub label_swaps: Option<usize>,
    pub update_mass: Option<bool>,
    pub parallel_particles: Option<bool>,
    pub seed: Option<u64>,
}

/// Configuration file as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: PathBuf,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub prior: PriorBlock,
    #[serde(default)]
    pub mcmc: McmcBlock,
}

/// Fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub data: PathBuf,
    pub output_dir: Option<PathBuf>,
    pub defaults: ModelDefaults,
    pub covariates: Vec<String>,
    pub prior: PriorSpec,
    pub preset: McmcPreset,
    pub mcmc: McmcConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    /// Fills every default. Relative data paths are taken relative to `base_dir`.
    pub fn resolve(&self, base_dir: &Path, seed_override: Option<u64>) -> CliResult<Resolved> {
        let m = &self.model;
        let covariates = m.covariates.clone().unwrap_or_default();
        let defaults = m.defaults.unwrap_or(if covariates.is_empty() {
            ModelDefaults::Applications
        } else {
            ModelDefaults::Covariates
        });
        let mut base = match defaults {
            ModelDefaults::Applications => BaseMeasure::default(),
            ModelDefaults::Simulation => PriorSpec::simulation().base,
            ModelDefaults::Covariates => BaseMeasure::covariate_default(),
        };
        base.mu0 = m.mu0.unwrap_or(base.mu0);
        base.lambda0 = m.lambda0.unwrap_or(base.lambda0);
        base.alpha = m.alpha.unwrap_or(base.alpha);
        base.beta = m.beta.unwrap_or(base.beta);
        base.kernel_scale = m.kernel_scale.unwrap_or(base.kernel_scale);

        let p = &self.prior;
        let d = PriorSpec::default();
        let prior = PriorSpec {
            process: p.process.unwrap_or(d.process),
            psi_prior: p.psi_prior.unwrap_or(d.psi_prior),
            mass_prior: GammaPrior {
                shape: p.mass_shape.unwrap_or(d.mass_prior.shape),
                rate: p.mass_rate.unwrap_or(d.mass_prior.rate),
            },
            base,
            truncation: p.truncation.unwrap_or(d.truncation),
            regression_prior_var: p.regression_prior_var.unwrap_or(d.regression_prior_var),
        };
        prior.validate()?;

        let c = &self.mcmc;
        let preset = c.preset.unwrap_or_default();
        let mut mcmc = match preset {
            McmcPreset::Applications => McmcConfig::applications(),
            McmcPreset::Simulation => McmcConfig::simulation(),
        };
        mcmc.iterations = c.iterations.unwrap_or(mcmc.iterations);
        mcmc.burn_in = c.burn_in.unwrap_or(mcmc.burn_in);
        mcmc.thin = c.thin.unwrap_or(mcmc.thin);
        mcmc.num_particles = c.num_particles.unwrap_or(mcmc.num_particles);
        mcmc.psi_proposal_sd = c.psi_proposal_sd.unwrap_or(mcmc.psi_proposal_sd);
        mcmc.mass_proposal_sd = c.mass_proposal_sd.unwrap_or(mcmc.mass_proposal_sd);
        mcmc.adapt_psi_proposal = c.adapt_psi_proposal.unwrap_or(mcmc.adapt_psi_proposal);
        mcmc.resampling = c.resampling.unwrap_or(mcmc.resampling);
        mcmc.smc_blocking = c.smc_blocking.unwrap_or(mcmc.smc_blocking);
        mcmc.label_swaps = c.label_swaps.unwrap_or(mcmc.label_swaps);
        mcmc.update_mass = c.update_mass.unwrap_or(mcmc.update_mass);
        mcmc.parallel_particles = c.parallel_particles.unwrap_or(mcmc.parallel_particles);
        mcmc.seed = seed_override.or(c.seed).unwrap_or(mcmc.seed);
        mcmc.validate()?;

        let joined = if self.data.is_relative() {
            base_dir.join(&self.data)
        } else {
            self.data.clone()
        };
        // Absolute, so the echoed config works from the output directory.
        let data = std::path::absolute(&joined).unwrap_or(joined);
        Ok(Resolved {
            data,
            output_dir: self.output_dir.clone(),
            defaults,
            covariates,
            prior,
            preset,
            mcmc,
        })
    }
}

impl Resolved {
    pub fn hash(&self) -> String {
        config_hash(&self.prior, &self.mcmc)
    }

    /// The resolved values in configuration-file form.
    pub fn to_run_config(&self) -> RunConfig {
        let b = &self.prior.base;
        let c = &self.mcmc;
        RunConfig {
            data: self.data.clone(),
            output_dir: self.output_dir.clone(),
            model: ModelBlock {
                defaults: Some(self.defaults),
                mu0: Some(b.mu0),
                lambda0: Some(b.lambda0),
                alpha: Some(b.alpha),
                beta: Some(b.beta),
                kernel_scale: Some(b.kernel_scale),
                covariates: Some(self.covariates.clone()),
            },
            prior: PriorBlock {
                process: Some(self.prior.process),
                psi_prior: Some(self.prior.psi_prior),
                mass_shape: Some(self.prior.mass_prior.shape),
                mass_rate: Some(self.prior.mass_prior.rate),
                truncation: Some(self.prior.truncation),
                regression_prior_var: Some(self.prior.regression_prior_var),
            },
            mcmc: McmcBlock {
                preset: Some(self.preset),
                iterations: Some(c.iterations),
                burn_in: Some(c.burn_in),
                thin: Some(c.thin),
                num_particles: Some(c.num_particles),
                psi_proposal_sd: Some(c.psi_proposal_sd),
                mass_proposal_sd: Some(c.mass_proposal_sd),
                adapt_psi_proposal: Some(c.adapt_psi_proposal),
                resampling: Some(c.resampling),
                smc_blocking: Some(c.smc_blocking),
                label_swaps: Some(c.label_swaps),
                update_mass: Some(c.update_mass),
                parallel_particles: Some(c.parallel_particles),
                seed: Some(c.seed),
            },
        }
    }

    /// TOML text with a provenance comment line.
    pub fn to_toml(&self) -> CliResult<String> {
        let body = toml::to_string(&self.to_run_config())
            .map_err(|e| CliError::runtime(format!("cannot serialise resolved config: {e}")))?;
        Ok(format!(
            "# ar1dp {} config_hash={}\n{body}",
            env!("CARGO_PKG_VERSION"),
            self.hash()
        ))
    }
}
