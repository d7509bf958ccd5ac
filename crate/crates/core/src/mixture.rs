//! Gaussian-kernel observation model with a Normal-Gamma base measure, an
//! optional per-time linear covariate term, and the conjugate Gibbs updates
//! for component parameters, allocations and regression coefficients.
//!
//! Kernel: y ~ N(μ_h + x'β_t, 1/(λ τ_h)). Base: τ ~ Gamma(α, β) (rate),
//! μ | τ ~ N(μ0, 1/(λ0 τ)). The atoms are shared across time.

use crate::error::{invalid, Error, Result};
use crate::logspace::normalize_in_place;
use crate::measure::{categorical, WeightMatrix};
use crate::normal::HALF_LN_2PI;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// Covariate block: one length-p vector per (t, j), stored T × n × p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    pub dim: usize,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// T × n panel of scalar observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    horizon: usize,
    units: usize,
    y: Vec<f64>,
    covariates: Option<Covariates>,
    time_ids: Vec<String>,
    unit_ids: Vec<String>,
}

impl Dataset {
    pub fn new(horizon: usize, units: usize, y: Vec<f64>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Data("dataset needs at least one time point".into()));
        }
        if y.len() != horizon * units {
            return Err(Error::Data(format!(
                "expected {horizon} x {units} = {} observations, got {}",
                horizon * units,
                y.len()
            )));
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "observation at time {} unit {} is missing or non-finite",
                pos / units.max(1),
                pos % units.max(1)
            )));
        }
        Ok(Self {
            horizon,
            units,
            y,
            covariates: None,
            time_ids: (1..=horizon).map(|t| t.to_string()).collect(),
            unit_ids: (1..=units).map(|j| j.to_string()).collect(),
        })
    }

    /// A dataset with no observations; the likelihood is flat.
    pub fn empty(horizon: usize) -> Result<Self> {
        Self::new(horizon, 0, Vec::new())
    }

    pub fn with_covariates(mut self, names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let dim = names.len();
        if dim == 0 {
            return Err(Error::Data("covariate block needs p >= 1".into()));
        }
        if values.len() != self.horizon * self.units * dim {
            return Err(Error::Data(format!(
                "covariates need {} values, got {}",
                self.horizon * self.units * dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("covariates contain non-finite values".into()));
        }
        self.covariates = Some(Covariates { dim, names, values });
        Ok(self)
    }

    pub fn with_ids(mut self, time_ids: Vec<String>, unit_ids: Vec<String>) -> Result<Self> {
        if time_ids.len() != self.horizon || unit_ids.len() != self.units {
            return Err(Error::Data("identifier lengths do not match the panel".into()));
        }
        self.time_ids = time_ids;
        self.unit_ids = unit_ids;
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn units(&self) -> usize {
        self.units
    }

    #[inline]
    pub fn y(&self, t: usize, j: usize) -> f64 {
        self.y[t * self.units + j]
    }

    pub fn y_row(&self, t: usize) -> &[f64] {
        &self.y[t * self.units..(t + 1) * self.units]
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn covariates(&self) -> Option<&Covariates> {
        self.covariates.as_ref()
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariates.as_ref().map_or(0, |c| c.dim)
    }

    /// Covariate vector of unit `j` at time `t`.
    #[inline]
    pub fn x(&self, t: usize, j: usize) -> Option<&[f64]> {
        self.covariates.as_ref().map(|c| {
            let start = (t * self.units + j) * c.dim;
            &c.values[start..start + c.dim]
        })
    }

    pub fn time_ids(&self) -> &[String] {
        &self.time_ids
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }
}

/// Normal-Gamma base measure plus the kernel precision scale λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseMeasure {
    pub mu0: f64,
    pub lambda0: f64,
    pub alpha: f64,
    pub beta: f64,
    /// λ in the kernel precision λτ. Not pinned down by the gender-data
    /// application; 1 is the default, 0.1 for the covariate configuration.
    pub kernel_scale: f64,
}

impl Default for BaseMeasure {
    fn default() -> Self {
        Self {
            mu0: 0.0,
            lambda0: 0.01,
            alpha: 2.0,
            beta: 1.0,
            kernel_scale: 1.0,
        }
    }
}

impl BaseMeasure {
    /// Defaults for data with covariates: kernel scale 0.1.
    pub fn covariate_default() -> Self {
        Self {
            kernel_scale: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu0.is_finite() {
            return Err(invalid("mu0", self.mu0, "must be finite"));
        }
        for (name, v) in [
            ("lambda0", self.lambda0),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("kernel_scale", self.kernel_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, v, "must be positive"));
            }
        }
        Ok(())
    }

    /// One draw (μ, τ) from G0.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        NormalGamma {
            mu: self.mu0,
            lambda: self.lambda0,
            alpha: self.alpha,
            beta: self.beta,
        }
        .sample(rng)
    }
}

/// Normal-Gamma law: τ ~ Gamma(alpha, rate beta), μ | τ ~ N(mu, 1/(lambda τ)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalGamma {
    pub mu: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl NormalGamma {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let tau = Gamma::new(self.alpha, 1.0 / self.beta)
            .expect("validated gamma parameters")
            .sample(rng)
            .max(f64::MIN_POSITIVE);
        let z: f64 = StandardNormal.sample(rng);
        (self.mu + z / (self.lambda * tau).sqrt(), tau)
    }
}

/// Sufficient statistics of the residuals allocated to one component.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualStats {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl ResidualStats {
    pub fn push(&mut self, r: f64) {
        self.count += 1;
        self.sum += r;
        self.sum_sq += r * r;
    }
}

/// Conjugate posterior of (μ, τ) given residuals with kernel precision λτ.
pub fn normal_gamma_posterior(base: &BaseMeasure, stats: &ResidualStats) -> NormalGamma {
    let n = stats.count as f64;
    let lam = base.kernel_scale;
    if stats.count == 0 {
        return NormalGamma {
            mu: base.mu0,
            lambda: base.lambda0,
            alpha: base.alpha,
            beta: base.beta,
        };
    }
    let mean = stats.sum / n;
    let within = (stats.sum_sq - n * mean * mean).max(0.0);
    let lambda_n = base.lambda0 + n * lam;
    let mu_n = (base.lambda0 * base.mu0 + lam * stats.sum) / lambda_n;
    let shift = mean - base.mu0;
    NormalGamma {
        mu: mu_n,
        lambda: lambda_n,
        alpha: base.alpha + 0.5 * n,
        beta: base.beta + 0.5 * (lam * within + base.lambda0 * n * lam * shift * shift / lambda_n),
    }
}

/// Atoms θ_h = (μ_h, τ_h), h = 1..J, shared across time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentParams {
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
}

impl ComponentParams {
    pub fn new(mu: Vec<f64>, tau: Vec<f64>) -> Result<Self> {
        if mu.len() != tau.len() {
            return Err(Error::Dimension("mu and tau lengths differ".into()));
        }
        if let Some(&t) = tau.iter().find(|t| !(**t > 0.0)) {
            return Err(invalid("tau", t, "component precision must be positive"));
        }
        Ok(Self { mu, tau })
    }

    pub fn from_prior<R: Rng + ?Sized>(base: &BaseMeasure, components: usize, rng: &mut R) -> Self {
        let (mu, tau) = (0..components).map(|_| base.sample(rng)).unzip();
        Self { mu, tau }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// Component indices s_tj (0-based) for every observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationState {
    horizon: usize,
    units: usize,
    s: Vec<u32>,
}

impl AllocationState {
    pub fn new(horizon: usize, units: usize, s: Vec<u32>, components: usize) -> Result<Self> {
        if s.len() != horizon * units {
            return Err(Error::Dimension(format!(
                "allocation needs {} entries, got {}",
                horizon * units,
                s.len()
            )));
        }
        if let Some(&bad) = s.iter().find(|&&h| h as usize >= components) {
            return Err(Error::Dimension(format!("allocation {bad} out of range 0..{components}")));
        }
        Ok(Self { horizon, units, s })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn units(&self) -> usize {
        self.units
    }

    #[inline]
    pub fn get(&self, t: usize, j: usize) -> usize {
        self.s[t * self.units + j] as usize
    }

    pub fn row(&self, t: usize) -> &[u32] {
        &self.s[t * self.units..(t + 1) * self.units]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.s
    }

    /// Exchanges the component labels `a` and `b` in every allocation.
    pub fn swap_labels(&mut self, a: usize, b: usize) {
        let (a, b) = (a as u32, b as u32);
        for h in &mut self.s {
            if *h == a {
                *h = b;
            } else if *h == b {
                *h = a;
            }
        }
    }

    /// Occupancy n_th of every component at time `t`.
    pub fn counts(&self, t: usize, components: usize) -> Vec<u32> {
        let mut c = vec![0u32; components];
        for &h in self.row(t) {
            c[h as usize] += 1;
        }
        c
    }
}

/// Per-time regression coefficients β_t with prior N(0, v0 I).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionState {
    pub dim: usize,
    pub prior_var: f64,
    pub beta: Vec<f64>,
}

impl RegressionState {
    /// Zero coefficients; `dim = 0` when the data carry no covariates.
    pub fn zeros(horizon: usize, dim: usize, prior_var: f64) -> Self {
        Self {
            dim,
            prior_var,
            beta: vec![0.0; horizon * dim],
        }
    }

    pub fn none() -> Self {
        Self::zeros(0, 0, 1.0)
    }

    pub fn is_active(&self) -> bool {
        self.dim > 0
    }

    pub fn row(&self, t: usize) -> Option<&[f64]> {
        self.is_active()
            .then(|| &self.beta[t * self.dim..(t + 1) * self.dim])
    }
}

#[inline]
fn offset(x: Option<&[f64]>, beta: Option<&[f64]>) -> f64 {
    match (x, beta) {
        (Some(x), Some(b)) => x.iter().zip(b).map(|(a, c)| a * c).sum(),
        _ => 0.0,
    }
}

/// log N(y; μ + x'β, 1/(λτ)); the linear term is dropped when either side is absent.
pub fn component_log_likelihood(
    y: f64,
    x: Option<&[f64]>,
    theta: (f64, f64),
    beta_t: Option<&[f64]>,
    base: &BaseMeasure,
) -> Result<f64> {
    let (mu, tau) = theta;
    if !(tau > 0.0) {
        return Err(invalid("tau", tau, "component precision must be positive"));
    }
    let prec = base.kernel_scale * tau;
    let d = y - mu - offset(x, beta_t);
    Ok(-HALF_LN_2PI + 0.5 * prec.ln() - 0.5 * prec * d * d)
}

/// Residual y − x'β for one observation.
#[inline]
pub fn residual(data: &Dataset, reg: &RegressionState, t: usize, j: usize) -> f64 {
    data.y(t, j) - offset(data.x(t, j), reg.row(t))
}

/// Gibbs step 1: fresh G0 draws for empty components, conjugate draws for the rest.
pub fn update_components<R: Rng + ?Sized>(
    alloc: &AllocationState,
    data: &Dataset,
    reg: &RegressionState,
    base: &BaseMeasure,
    components: usize,
    rng: &mut R,
) -> ComponentParams {
    let mut stats = vec![ResidualStats::default(); components];
    for t in 0..data.horizon() {
        for j in 0..data.units() {
            stats[alloc.get(t, j)].push(residual(data, reg, t, j));
        }
    }
    let (mu, tau) = stats
        .iter()
        .map(|s| normal_gamma_posterior(base, s).sample(rng))
        .unzip();
    ComponentParams { mu, tau }
}

/// Gibbs step 2: draws every s_tj from w_th · k(y_tj; θ_h), normalised in log space.
pub fn sample_allocations<R: Rng + ?Sized>(
    data: &Dataset,
    weights: &WeightMatrix,
    comps: &ComponentParams,
    reg: &RegressionState,
    base: &BaseMeasure,
    rng: &mut R,
) -> Result<AllocationState> {
    let j_max = weights.components();
    if comps.len() != j_max || weights.horizon() != data.horizon() {
        return Err(Error::Dimension(format!(
            "weights {} x {}, components {}, data horizon {}",
            weights.horizon(),
            j_max,
            comps.len(),
            data.horizon()
        )));
    }
    let half_log_prec: Vec<f64> = comps
        .tau
        .iter()
        .map(|t| 0.5 * (base.kernel_scale * t).ln())
        .collect();
    let half_prec: Vec<f64> = comps.tau.iter().map(|t| 0.5 * base.kernel_scale * t).collect();
    let mut s = Vec::with_capacity(data.horizon() * data.units());
    let mut logp = vec![0.0; j_max];
    for t in 0..data.horizon() {
        let log_w: Vec<f64> = weights.row(t).iter().map(|w| w.ln()).collect();
        for j in 0..data.units() {
            let r = residual(data, reg, t, j);
            for h in 0..j_max {
                let d = r - comps.mu[h];
                logp[h] = log_w[h] + half_log_prec[h] - half_prec[h] * d * d;
            }
            if logp.iter().any(|v| v.is_nan()) {
                return Err(Error::Numerical(format!("NaN allocation weight at ({t}, {j})")));
            }
            normalize_in_place(&mut logp);
            s.push(categorical(&logp, rng) as u32);
        }
    }
    AllocationState::new(data.horizon(), data.units(), s, j_max)
}

/// Gaussian full conditional of β_t given allocations and atoms.
pub fn regression_posterior(
    data: &Dataset,
    alloc: &AllocationState,
    comps: &ComponentParams,
    reg: &RegressionState,
    base: &BaseMeasure,
    t: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = reg.dim;
    let mut prec = DMatrix::<f64>::identity(p, p) / reg.prior_var;
    let mut rhs = DVector::<f64>::zeros(p);
    for j in 0..data.units() {
        let h = alloc.get(t, j);
        let w = base.kernel_scale * comps.tau[h];
        let x = DVector::from_column_slice(data.x(t, j).expect("covariates present"));
        prec += w * &x * x.transpose();
        rhs += w * (data.y(t, j) - comps.mu[h]) * &x;
    }
    let chol = prec
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical(format!("singular regression precision at t = {t}")))?;
    let mean = chol.solve(&rhs);
    Ok((mean, prec))
}

/// Draws each β_t from its Gaussian full conditional; a no-op without covariates.
pub fn update_regression<R: Rng + ?Sized>(
    data: &Dataset,
    alloc: &AllocationState,
    comps: &ComponentParams,
    reg: &RegressionState,
    base: &BaseMeasure,
    rng: &mut R,
) -> Result<RegressionState> {
    if !reg.is_active() || data.covariates().is_none() {
        return Ok(reg.clone());
    }
    if !(reg.prior_var > 0.0) {
        return Err(invalid("v0", reg.prior_var, "prior variance must be positive"));
    }
    let p = reg.dim;
    let mut out = reg.clone();
    for t in 0..data.horizon() {
        let (mean, prec) = regression_posterior(data, alloc, comps, reg, base, t)?;
        let chol = prec
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("singular regression precision at t = {t}")))?;
        // β = mean + L^{-T} z has covariance (L Lᵀ)^{-1}.
        let z = DVector::<f64>::from_iterator(p, (0..p).map(|_| StandardNormal.sample(rng)));
        let dev = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let draw = mean + dev;
        out.beta[t * p..(t + 1) * p].copy_from_slice(draw.as_slice());
    }
    Ok(out)
}
