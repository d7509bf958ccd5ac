//! Blocked Gibbs sampler: chain state, one-sweep driver, and the thinned trace.

use super::config::{config_hash, McmcConfig, PriorSpec, SmcBlocking, PSI_TARGET_ACCEPTANCE};
use super::relabel::label_swap_moves;
use super::smc::{conditional_smc_stickwise, conditional_smc_with_counts, SmcSettings, StickCounts};
use super::updates::{pmmh_update_psi, update_mass};
use crate::error::{Error, Result};
use crate::measure::{weights_from_eps, WeightMatrix};
use crate::mixture::{
    sample_allocations, update_components, update_regression, AllocationState, ComponentParams, Dataset,
    RegressionState,
};
use crate::prior::{sample_ar1_path, Ar1Params, EpsPath, WeightProcessKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Full parameter block of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub eps: EpsPath,
    /// Particle indices of `eps` in the last conditional SMC sweep: one per
    /// time for joint sweeps, `l * T + t` for stick-by-stick sweeps.
    pub lineage: Vec<usize>,
    pub weights: WeightMatrix,
    pub comps: ComponentParams,
    pub alloc: AllocationState,
    pub reg: RegressionState,
    pub psi: f64,
    pub mass: f64,
    /// SMC estimate of log p(s | ψ) from the last sweep.
    pub log_evidence: f64,
}

impl ChainState {
    /// Whether `weights` is exactly the stick-breaking image of (ε, M).
    pub fn weights_coherent(&self) -> bool {
        self.weights == weights_from_eps(&self.eps, self.mass)
    }

    fn refresh_weights(&mut self) {
        self.weights = weights_from_eps(&self.eps, self.mass);
    }
}

/// Acceptance flags of one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepInfo {
    pub psi_accepted: bool,
    pub mass_accepted: bool,
    /// ψ proposal sd used in this sweep.
    pub psi_proposal_sd: f64,
}

/// Single-chain blocked Gibbs sampler. The dataset is passed to every sweep
/// so that callers may alter the observations between sweeps.
#[derive(Debug, Clone)]
pub struct Sampler {
    prior: PriorSpec,
    config: McmcConfig,
    state: ChainState,
    rng: ChaCha8Rng,
    psi_sd: f64,
    sweeps: usize,
}

fn check_data(data: &Dataset, prior: &PriorSpec) -> Result<()> {
    if data.covariate_dim() > 0 && data.units() == 0 {
        return Err(Error::Data("covariates given for an empty panel".into()));
    }
    if prior.process != WeightProcessKind::Ar1Dp {
        return Err(Error::Config(format!(
            "posterior sampling is implemented for the ar1_dp process only, got {}",
            prior.process.name()
        )));
    }
    Ok(())
}

fn initial_lineage_len(blocking: SmcBlocking, horizon: usize, sticks: usize) -> usize {
    match blocking {
        SmcBlocking::Joint => horizon,
        SmcBlocking::PerStick => horizon * sticks,
    }
}

impl Sampler {
    /// Validates the inputs and draws the initial state: ε ~ AR(1) with ψ = 0,
    /// M at its prior mean, atoms from G0, β = 0, and one allocation pass under
    /// the resulting weights.
    pub fn new(data: &Dataset, prior: &PriorSpec, config: &McmcConfig) -> Result<Self> {
        prior.validate()?;
        config.validate()?;
        check_data(data, prior)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let j = prior.truncation;
        let horizon = data.horizon();
        let psi = 0.0;
        let mass = prior.mass_prior.mean();
        let eps = sample_ar1_path(Ar1Params::new(psi)?, horizon, j - 1, &mut rng)?;
        let weights = weights_from_eps(&eps, mass);
        let comps = ComponentParams::from_prior(&prior.base, j, &mut rng);
        let reg = if data.covariate_dim() > 0 {
            RegressionState::zeros(horizon, data.covariate_dim(), prior.regression_prior_var)
        } else {
            RegressionState::none()
        };
        let alloc = sample_allocations(data, &weights, &comps, &reg, &prior.base, &mut rng)?;
        let state = ChainState {
            eps,
            lineage: vec![0; initial_lineage_len(config.smc_blocking, horizon, j - 1)],
            weights,
            comps,
            alloc,
            reg,
            psi,
            mass,
            log_evidence: 0.0,
        };
        Ok(Self {
            prior: prior.clone(),
            config: config.clone(),
            state,
            rng,
            psi_sd: config.psi_proposal_sd,
            sweeps: 0,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    /// Current ψ proposal sd (changes only when adaptation is on, during burn-in).
    pub fn psi_proposal_sd(&self) -> f64 {
        self.psi_sd
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// The chain's generator, for callers that interleave their own draws.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One full sweep: atoms, allocations, label swaps, (ψ, ε) jointly, M, then β.
    pub fn sweep(&mut self, data: &Dataset) -> Result<SweepInfo> {
        let j = self.prior.truncation;
        let base = &self.prior.base;
        let st = &mut self.state;
        let rng = &mut self.rng;
        if data.horizon() != st.eps.horizon() || data.units() != st.alloc.units() {
            return Err(Error::Dimension("dataset shape changed between sweeps".into()));
        }

        st.comps = update_components(&st.alloc, data, &st.reg, base, j, rng);
        st.alloc = sample_allocations(data, &st.weights, &st.comps, &st.reg, base, rng)?;
        label_swap_moves(st, self.config.smc_blocking, self.config.label_swaps, rng)?;

        let psi_sd = self.psi_sd;
        let psi_step = pmmh_update_psi(st.psi, &st.eps, &self.prior.psi_prior, psi_sd, rng)?;
        st.psi = psi_step.value;
        let counts = StickCounts::new(&st.alloc, j);
        let settings = SmcSettings {
            num_particles: self.config.num_particles,
            resampling: self.config.resampling,
            parallel: self.config.parallel_particles,
        };
        match self.config.smc_blocking {
            SmcBlocking::Joint => {
                let out = conditional_smc_with_counts(&counts, st.psi, st.mass, &st.eps, &st.lineage, &settings, rng)?;
                st.log_evidence = out.system.log_marginal_likelihood();
                st.eps = out.path;
                st.lineage = out.lineage;
            }
            SmcBlocking::PerStick => {
                let out = conditional_smc_stickwise(&counts, st.psi, st.mass, &st.eps, &st.lineage, &settings, rng)?;
                st.log_evidence = out.log_evidence;
                st.eps = out.path;
                st.lineage = out.lineage;
            }
        }

        let mut mass_accepted = false;
        if self.config.update_mass {
            let step = update_mass(
                st.mass,
                &st.eps,
                &counts,
                &self.prior.mass_prior,
                self.config.mass_proposal_sd,
                rng,
            )?;
            st.mass = step.value;
            mass_accepted = step.accepted;
        }
        st.refresh_weights();

        st.reg = update_regression(data, &st.alloc, &st.comps, &st.reg, base, rng)?;

        if self.config.adapt_psi_proposal && self.sweeps < self.config.burn_in {
            let acc = if psi_step.accepted { 1.0 } else { 0.0 };
            let gain = (self.sweeps as f64 + 1.0).powf(-0.6);
            self.psi_sd = (self.psi_sd.ln() + gain * (acc - PSI_TARGET_ACCEPTANCE))
                .exp()
                .clamp(1e-3, 10.0);
        }
        self.sweeps += 1;
        Ok(SweepInfo {
            psi_accepted: psi_step.accepted,
            mass_accepted,
            psi_proposal_sd: psi_sd,
        })
    }
}

/// One retained draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub iteration: usize,
    pub psi: f64,
    pub mass: f64,
    pub log_evidence: f64,
    /// s_tj, T × n row-major.
    pub alloc: Vec<u32>,
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    /// β_t, T × p row-major (empty without covariates).
    pub beta: Vec<f64>,
    /// w_th, T × J row-major.
    pub weights: Vec<f64>,
}

impl Draw {
    fn record(iteration: usize, st: &ChainState) -> Self {
        Self {
            iteration,
            psi: st.psi,
            mass: st.mass,
            log_evidence: st.log_evidence,
            alloc: st.alloc.as_slice().to_vec(),
            mu: st.comps.mu.clone(),
            tau: st.comps.tau.clone(),
            beta: st.reg.beta.clone(),
            weights: st.weights.as_slice().to_vec(),
        }
    }
}

/// Identifies the run that produced a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

/// Thinned post-burn-in output of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub horizon: usize,
    pub units: usize,
    pub components: usize,
    pub covariate_dim: usize,
    pub prior: PriorSpec,
    pub config: McmcConfig,
    pub draws: Vec<Draw>,
    pub psi_acceptance: f64,
    pub mass_acceptance: f64,
    pub final_psi_proposal_sd: f64,
    pub provenance: Provenance,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn psi(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.psi).collect()
    }

    pub fn mass(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.mass).collect()
    }

    /// Allocation row s_t· of draw `d`.
    pub fn alloc_row(&self, d: usize, t: usize) -> &[u32] {
        &self.draws[d].alloc[t * self.units..(t + 1) * self.units]
    }

    /// Weight row w_t· of draw `d`.
    pub fn weight_row(&self, d: usize, t: usize) -> &[f64] {
        &self.draws[d].weights[t * self.components..(t + 1) * self.components]
    }

    /// β_t of draw `d`, if covariates were used.
    pub fn beta_row(&self, d: usize, t: usize) -> Option<&[f64]> {
        (self.covariate_dim > 0)
            .then(|| &self.draws[d].beta[t * self.covariate_dim..(t + 1) * self.covariate_dim])
    }
}

/// Runs one chain and returns its thinned trace.
pub fn run_mcmc(data: &Dataset, prior: &PriorSpec, config: &McmcConfig) -> Result<Trace> {
    run_mcmc_with_progress(data, prior, config, |_, _, _| {})
}

/// [`run_mcmc`] with a callback invoked after every sweep.
pub fn run_mcmc_with_progress<F: FnMut(usize, &ChainState, &SweepInfo)>(
    data: &Dataset,
    prior: &PriorSpec,
    config: &McmcConfig,
    mut progress: F,
) -> Result<Trace> {
    let mut sampler = Sampler::new(data, prior, config)?;
    let mut draws = Vec::with_capacity(config.retained());
    let (mut psi_acc, mut mass_acc) = (0usize, 0usize);
    for iter in 0..config.iterations {
        let info = sampler.sweep(data)?;
        psi_acc += info.psi_accepted as usize;
        mass_acc += info.mass_accepted as usize;
        if config.keeps(iter) {
            draws.push(Draw::record(iter, sampler.state()));
        }
        progress(iter, sampler.state(), &info);
    }
    let n = config.iterations as f64;
    Ok(Trace {
        horizon: data.horizon(),
        units: data.units(),
        components: prior.truncation,
        covariate_dim: data.covariate_dim(),
        prior: prior.clone(),
        config: config.clone(),
        draws,
        psi_acceptance: psi_acc as f64 / n,
        mass_acceptance: mass_acc as f64 / n,
        final_psi_proposal_sd: sampler.psi_proposal_sd(),
        provenance: Provenance {
            config_hash: config_hash(prior, config),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}
