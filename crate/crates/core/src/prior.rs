//! Latent Gaussian AR(1) process, the copula map onto Beta(1, M) stick
//! variables, and the two competitor stick recursions (Taddy-style beta
//! autoregression and the squared-AR(1) construction of DeYoreo and Kottas).
//!
//! Every stick process here has Beta(1, M) marginals at each time, so each
//! induced random measure is marginally a DP(M, G0).

use crate::error::{invalid, Error, Result};
use crate::normal;
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Autocorrelation of the latent AR(1) process. Innovations have variance `1 - psi²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Params {
    psi: f64,
}

impl Ar1Params {
    pub fn new(psi: f64) -> Result<Self> {
        if !(psi.is_finite() && psi.abs() < 1.0) {
            return Err(invalid("psi", psi, "must lie strictly inside (-1, 1)"));
        }
        Ok(Self { psi })
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn innovation_var(&self) -> f64 {
        1.0 - self.psi * self.psi
    }

    pub fn innovation_sd(&self) -> f64 {
        self.innovation_var().sqrt()
    }

    /// One transition `psi * prev + eta`, with `eta` drawn from the innovation law.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, prev: f64, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.psi * prev + self.innovation_sd() * z
    }
}

/// Beta(1, M) marginal used by the copula map. The first shape is fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaSpec {
    mass: f64,
}

impl CopulaSpec {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("M", mass, "total mass must be positive"));
        }
        Ok(Self { mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn a(&self) -> f64 {
        1.0
    }

    pub fn b(&self) -> f64 {
        self.mass
    }

    /// Beta(1, M) CDF.
    pub fn beta_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            -(self.mass * (-x).ln_1p()).exp_m1()
        }
    }
}

/// T × L matrix of latent Gaussians; column `l` is one AR(1) realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsPath {
    horizon: usize,
    sticks: usize,
    values: Vec<f64>,
}

impl EpsPath {
    pub fn new(horizon: usize, sticks: usize, values: Vec<f64>) -> Result<Self> {
        if horizon == 0 || sticks == 0 {
            return Err(Error::Dimension(format!(
                "path needs T >= 1 and L >= 1, got T = {horizon}, L = {sticks}"
            )));
        }
        if values.len() != horizon * sticks {
            return Err(Error::Dimension(format!(
                "expected {} path values, got {}",
                horizon * sticks,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite path entry {bad}")));
        }
        Ok(Self {
            horizon,
            sticks,
            values,
        })
    }

    pub fn zeros(horizon: usize, sticks: usize) -> Self {
        Self {
            horizon,
            sticks,
            values: vec![0.0; horizon * sticks],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn sticks(&self) -> usize {
        self.sticks
    }

    #[inline]
    pub fn get(&self, t: usize, l: usize) -> f64 {
        self.values[t * self.sticks + l]
    }

    #[inline]
    pub fn set(&mut self, t: usize, l: usize, value: f64) {
        self.values[t * self.sticks + l] = value;
    }

    /// All sticks at time `t`.
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.sticks..(t + 1) * self.sticks]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.values[t * self.sticks..(t + 1) * self.sticks]
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        (0..self.horizon).map(|t| self.get(t, l)).collect()
    }

    /// Exchanges sticks `a` and `b` at every time.
    pub fn swap_columns(&mut self, a: usize, b: usize) {
        for t in 0..self.horizon {
            self.values.swap(t * self.sticks + a, t * self.sticks + b);
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Draws `sticks` independent stationary AR(1) columns of length `horizon`.
pub fn sample_ar1_path<R: Rng + ?Sized>(
    params: Ar1Params,
    horizon: usize,
    sticks: usize,
    rng: &mut R,
) -> Result<EpsPath> {
    if horizon == 0 || sticks == 0 {
        return Err(Error::Dimension(format!(
            "path needs T >= 1 and L >= 1, got T = {horizon}, L = {sticks}"
        )));
    }
    let mut path = EpsPath::zeros(horizon, sticks);
    for l in 0..sticks {
        path.set(0, l, StandardNormal.sample(rng));
    }
    for t in 1..horizon {
        for l in 0..sticks {
            let prev = path.get(t - 1, l);
            path.set(t, l, params.step(prev, rng));
        }
    }
    Ok(path)
}

/// log of N(e₁; 0, 1) ∏ₜ N(eₜ; ψ eₜ₋₁, 1 − ψ²) for a single column.
pub fn ar1_log_density(column: &[f64], params: Ar1Params) -> Result<f64> {
    let Some(&first) = column.first() else {
        return Err(Error::Dimension("AR(1) density needs a non-empty path".into()));
    };
    let var = params.innovation_var();
    let mut lp = normal::log_density(first, 0.0, 1.0);
    for w in column.windows(2) {
        lp += normal::log_density(w[1], params.psi * w[0], var);
    }
    Ok(lp)
}

/// Sum of [`ar1_log_density`] over every column of a path.
pub fn path_log_density(path: &EpsPath, params: Ar1Params) -> f64 {
    let var = params.innovation_var();
    let log_var = var.ln();
    let psi = params.psi;
    let mut sq0 = 0.0;
    for &e in path.row(0) {
        sq0 += e * e;
    }
    let mut sq = 0.0;
    for t in 1..path.horizon() {
        for (&cur, &prev) in path.row(t).iter().zip(path.row(t - 1)) {
            let d = cur - psi * prev;
            sq += d * d;
        }
    }
    let n0 = path.sticks() as f64;
    let n1 = (path.sticks() * (path.horizon() - 1)) as f64;
    -normal::HALF_LN_2PI * (n0 + n1) - 0.5 * sq0 - 0.5 * n1 * log_var - 0.5 * sq / var
}

/// ξ = 1 − (1 − Φ(ε))^{1/M}.
#[inline]
pub fn copula_transform(eps: f64, spec: CopulaSpec) -> f64 {
    -log_one_minus_xi(eps, spec.mass).exp_m1()
}

/// log(1 − ξ) for ξ = copula_transform(ε), computed without cancellation.
#[inline]
pub fn log_one_minus_xi(eps: f64, mass: f64) -> f64 {
    normal::log_cdf(-eps) / mass
}

/// (log ξ, log(1 − ξ)) for the stick obtained from `eps`.
#[inline]
pub fn log_stick_pair(eps: f64, mass: f64) -> (f64, f64) {
    let log_rest = log_one_minus_xi(eps, mass);
    let log_xi = if log_rest > -std::f64::consts::LN_2 {
        (-log_rest.exp_m1()).ln()
    } else {
        (-log_rest.exp()).ln_1p()
    };
    (log_xi, log_rest)
}

/// ε = Φ⁻¹(1 − (1 − ξ)^M), the exact inverse of [`copula_transform`].
pub fn inverse_copula(xi: f64, spec: CopulaSpec) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(invalid("xi", xi, "must lie strictly inside (0, 1)"));
    }
    // (1 − ξ)^M and its complement, each formed without cancellation.
    let log_upper = spec.mass * (-xi).ln_1p();
    let upper = log_upper.exp();
    if upper < 0.5 {
        Ok(-normal::quantile_unclamped(upper))
    } else {
        Ok(normal::quantile_unclamped(-log_upper.exp_m1()))
    }
}

/// Draws ξₜ given ξₜ₋₁ through the latent Gaussian transition.
pub fn conditional_xi_sample<R: Rng + ?Sized>(
    xi_prev: f64,
    psi: f64,
    spec: CopulaSpec,
    rng: &mut R,
) -> Result<f64> {
    let params = Ar1Params::new(psi)?;
    let eps_prev = inverse_copula(xi_prev, spec)?;
    Ok(copula_transform(params.step(eps_prev, rng), spec))
}

/// 1 − u (1 − w ξₜ₋₁).
#[inline]
pub fn taddy_update(xi_prev: f64, u: f64, w: f64) -> f64 {
    1.0 - u * (1.0 - w * xi_prev)
}

fn taddy_check(psi: f64) -> Result<()> {
    if !(psi > 0.0 && psi < 1.0) {
        return Err(invalid("psi", psi, "Taddy recursion needs psi in (0, 1)"));
    }
    Ok(())
}

/// One step of the beta autoregression: u ~ Beta(M, 1 − ψ), w ~ Beta(ψ, 1 − ψ).
pub fn taddy_xi_step<R: Rng + ?Sized>(xi_prev: f64, psi: f64, mass: f64, rng: &mut R) -> Result<f64> {
    taddy_check(psi)?;
    CopulaSpec::new(mass)?;
    let u = Beta::new(mass, 1.0 - psi)
        .map_err(|_| invalid("psi", psi, "invalid Beta(M, 1 - psi) shape"))?
        .sample(rng);
    let w = Beta::new(psi, 1.0 - psi)
        .map_err(|_| invalid("psi", psi, "invalid Beta(psi, 1 - psi) shape"))?
        .sample(rng);
    Ok(taddy_update(xi_prev, u, w))
}

/// Lag-k correlation of the beta autoregression, (ψM / (1 + M − ψ))^k.
pub fn taddy_autocorrelation(psi: f64, mass: f64, lag: u32) -> Result<f64> {
    taddy_check(psi)?;
    CopulaSpec::new(mass)?;
    if lag == 0 {
        return Err(invalid("k", 0.0, "lag must be at least 1"));
    }
    Ok((psi * mass / (1.0 + mass - psi)).powi(lag as i32))
}

/// 1 − exp{−(ζ² + η²) / (2M)}.
#[inline]
pub fn dyk_xi(zeta: f64, eta: f64, mass: f64) -> f64 {
    -(-(zeta * zeta + eta * eta) / (2.0 * mass)).exp_m1()
}

/// Draws a T × L row-major matrix of squared-AR(1) sticks with one static ζ per column.
pub fn dyk_xi_path<R: Rng + ?Sized>(
    psi: f64,
    mass: f64,
    horizon: usize,
    sticks: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let process = DeYoreoKottas::new(psi, mass)?;
    simulate_sticks(&process, horizon, sticks, rng)
}

/// Which stick recursion drives the weights over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightProcessKind {
    #[default]
    Ar1Dp,
    Taddy,
    DeYoreoKottas,
}

impl WeightProcessKind {
    pub fn validate(&self, psi: f64, mass: f64) -> Result<()> {
        CopulaSpec::new(mass)?;
        match self {
            Self::Taddy => taddy_check(psi),
            Self::Ar1Dp | Self::DeYoreoKottas => Ar1Params::new(psi).map(|_| ()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ar1Dp => "ar1_dp",
            Self::Taddy => "taddy",
            Self::DeYoreoKottas => "de_yoreo_kottas",
        }
    }
}

/// Common contract for the stick processes: a per-stick latent state with an
/// initial law, a Markov transition, and the stick value it implies.
pub trait WeightProcess {
    type State: Copy;

    fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn transition<R: Rng + ?Sized>(&self, prev: &Self::State, rng: &mut R) -> Self::State;

    fn stick(&self, state: &Self::State) -> f64;

    /// Log-density of a latent trajectory, when the process admits one.
    fn path_log_density(&self, _states: &[Self::State]) -> Option<f64> {
        None
    }
}

/// The copula-transformed AR(1) process.
#[derive(Debug, Clone, Copy)]
pub struct Ar1Dp {
    pub ar: Ar1Params,
    pub copula: CopulaSpec,
}

impl Ar1Dp {
    pub fn new(psi: f64, mass: f64) -> Result<Self> {
        Ok(Self {
            ar: Ar1Params::new(psi)?,
            copula: CopulaSpec::new(mass)?,
        })
    }
}

impl WeightProcess for Ar1Dp {
    type State = f64;

    fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        StandardNormal.sample(rng)
    }

    fn transition<R: Rng + ?Sized>(&self, prev: &f64, rng: &mut R) -> f64 {
        self.ar.step(*prev, rng)
    }

    fn stick(&self, state: &f64) -> f64 {
        copula_transform(*state, self.copula)
    }

    fn path_log_density(&self, states: &[f64]) -> Option<f64> {
        ar1_log_density(states, self.ar).ok()
    }
}

/// Beta autoregression on the sticks themselves; only positive dependence.
#[derive(Debug, Clone, Copy)]
pub struct Taddy {
    psi: f64,
    mass: f64,
    u: Beta<f64>,
    w: Beta<f64>,
    marginal: Beta<f64>,
}

impl Taddy {
    pub fn new(psi: f64, mass: f64) -> Result<Self> {
        taddy_check(psi)?;
        CopulaSpec::new(mass)?;
        let shape_err = |_| invalid("psi", psi, "invalid beta shape");
        Ok(Self {
            psi,
            mass,
            u: Beta::new(mass, 1.0 - psi).map_err(shape_err)?,
            w: Beta::new(psi, 1.0 - psi).map_err(shape_err)?,
            marginal: Beta::new(1.0, mass).map_err(|_| invalid("M", mass, "invalid beta shape"))?,
        })
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl WeightProcess for Taddy {
    type State = f64;

    fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.marginal.sample(rng)
    }

    fn transition<R: Rng + ?Sized>(&self, prev: &f64, rng: &mut R) -> f64 {
        taddy_update(*prev, self.u.sample(rng), self.w.sample(rng))
    }

    fn stick(&self, state: &f64) -> f64 {
        *state
    }
}

/// Sticks 1 − exp{−(ζ² + ηₜ²)/(2M)} with static ζ and AR(1) η. The latent
/// pair is not recoverable from ξ, so no path density is offered.
#[derive(Debug, Clone, Copy)]
pub struct DeYoreoKottas {
    ar: Ar1Params,
    mass: f64,
}

impl DeYoreoKottas {
    pub fn new(psi: f64, mass: f64) -> Result<Self> {
        Ok(Self {
            ar: Ar1Params::new(psi)?,
            mass: CopulaSpec::new(mass)?.mass(),
        })
    }
}

/// Static ζ and current η for one stick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykState {
    pub zeta: f64,
    pub eta: f64,
}

impl WeightProcess for DeYoreoKottas {
    type State = DykState;

    fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> DykState {
        DykState {
            zeta: StandardNormal.sample(rng),
            eta: StandardNormal.sample(rng),
        }
    }

    fn transition<R: Rng + ?Sized>(&self, prev: &DykState, rng: &mut R) -> DykState {
        DykState {
            zeta: prev.zeta,
            eta: self.ar.step(prev.eta, rng),
        }
    }

    fn stick(&self, state: &DykState) -> f64 {
        dyk_xi(state.zeta, state.eta, self.mass)
    }
}

/// Forward-simulates a T × L row-major matrix of sticks from any process.
pub fn simulate_sticks<P: WeightProcess, R: Rng + ?Sized>(
    process: &P,
    horizon: usize,
    sticks: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if horizon == 0 || sticks == 0 {
        return Err(Error::Dimension(format!(
            "sticks need T >= 1 and L >= 1, got T = {horizon}, L = {sticks}"
        )));
    }
    let mut out = vec![0.0; horizon * sticks];
    for l in 0..sticks {
        let mut state = process.initial(rng);
        out[l] = process.stick(&state);
        for t in 1..horizon {
            state = process.transition(&state, rng);
            out[t * sticks + l] = process.stick(&state);
        }
    }
    Ok(out)
}

/// Forward-simulates sticks for a process chosen at runtime.
pub fn simulate_sticks_of_kind<R: Rng + ?Sized>(
    kind: WeightProcessKind,
    psi: f64,
    mass: f64,
    horizon: usize,
    sticks: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match kind {
        WeightProcessKind::Ar1Dp => simulate_sticks(&Ar1Dp::new(psi, mass)?, horizon, sticks, rng),
        WeightProcessKind::Taddy => simulate_sticks(&Taddy::new(psi, mass)?, horizon, sticks, rng),
        WeightProcessKind::DeYoreoKottas => {
            simulate_sticks(&DeYoreoKottas::new(psi, mass)?, horizon, sticks, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{correlation, ks_one_sample, mean};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn ar1_params_reject_boundary() {
        assert!(Ar1Params::new(1.0).is_err());
        assert!(Ar1Params::new(-1.0).is_err());
        assert!(Ar1Params::new(f64::NAN).is_err());
        assert!(Ar1Params::new(0.999).is_ok());
    }

    #[test]
    fn near_unit_psi_gives_nearly_constant_columns() {
        let p = Ar1Params::new(1.0 - 1e-10).unwrap();
        let path = sample_ar1_path(p, 10, 5, &mut rng(1)).unwrap();
        for l in 0..5 {
            let col = path.column(l);
            for v in &col {
                assert!((v - col[0]).abs() < 1e-3);
            }
        }
    }

    fn lag_correlation(psi: f64, lag: usize, paths: usize, seed: u64) -> f64 {
        let p = Ar1Params::new(psi).unwrap();
        let mut r = rng(seed);
        let mut a = Vec::with_capacity(paths);
        let mut b = Vec::with_capacity(paths);
        for _ in 0..paths {
            let path = sample_ar1_path(p, lag + 1, 1, &mut r).unwrap();
            a.push(path.get(0, 0));
            b.push(path.get(lag, 0));
        }
        correlation(&a, &b)
    }

    #[test]
    fn independent_case_has_zero_lag_one_correlation() {
        assert!(lag_correlation(0.0, 1, 100_000, 2).abs() < 0.01);
    }

    #[test]
    fn lag_two_correlation_is_psi_squared() {
        let c = lag_correlation(0.5, 2, 100_000, 3);
        assert!((c - 0.25).abs() < 0.02, "{c}");
    }

    #[test]
    fn ar1_density_closed_forms() {
        let p = Ar1Params::new(0.5).unwrap();
        let one = ar1_log_density(&[0.0], p).unwrap();
        assert!((one + LN_SQRT_2PI).abs() < 1e-12);
        let two = ar1_log_density(&[0.0, 0.0], p).unwrap();
        let expected = -LN_SQRT_2PI - 0.5 * (2.0 * std::f64::consts::PI * 0.75).ln();
        assert!((two - expected).abs() < 1e-12);
        assert!((two + 1.6940).abs() < 1e-4);
        assert!(ar1_log_density(&[], p).is_err());
    }

    #[test]
    fn ar1_density_matches_product_of_step_densities() {
        let p = Ar1Params::new(0.3).unwrap();
        let path = sample_ar1_path(p, 12, 1, &mut rng(4)).unwrap();
        let col = path.column(0);
        let pdf = |x: f64, m: f64, v: f64| {
            (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
        };
        let mut prod = pdf(col[0], 0.0, 1.0);
        for w in col.windows(2) {
            prod *= pdf(w[1], 0.3 * w[0], 0.91);
        }
        let lp = ar1_log_density(&col, p).unwrap();
        assert!((lp - prod.ln()).abs() < 1e-12);
    }

    #[test]
    fn path_density_sums_columns() {
        let p = Ar1Params::new(-0.4).unwrap();
        let path = sample_ar1_path(p, 6, 7, &mut rng(5)).unwrap();
        let by_column: f64 = (0..7).map(|l| ar1_log_density(&path.column(l), p).unwrap()).sum();
        assert!((path_log_density(&path, p) - by_column).abs() < 1e-10);
    }

    #[test]
    fn copula_closed_forms() {
        let m1 = CopulaSpec::new(1.0).unwrap();
        let m2 = CopulaSpec::new(2.0).unwrap();
        assert!((copula_transform(0.0, m1) - 0.5).abs() < 1e-15);
        assert!((copula_transform(0.0, m2) - (1.0 - 2f64.powf(-0.5))).abs() < 1e-15);
        assert!(inverse_copula(0.5, m1).unwrap().abs() < 1e-12);
        assert!(inverse_copula(0.29289, m2).unwrap().abs() < 1e-4);
        assert!(inverse_copula(0.0, m1).is_err());
        assert!(inverse_copula(1.0, m1).is_err());
        assert!(CopulaSpec::new(0.0).is_err());
    }

    #[test]
    fn copula_marginal_is_beta_one_m() {
        let spec = CopulaSpec::new(5.0).unwrap();
        let mut r = rng(6);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| copula_transform(StandardNormal.sample(&mut r), spec))
            .collect();
        assert!(ks_one_sample(&xs, |x| spec.beta_cdf(x)).passes(0.01));
    }

    #[test]
    fn random_round_trips() {
        let mut r = rng(7);
        for _ in 0..100 {
            let xi: f64 = r.gen_range(0.001..0.999);
            let spec = CopulaSpec::new(r.gen_range(0.1..20.0)).unwrap();
            let back = copula_transform(inverse_copula(xi, spec).unwrap(), spec);
            assert!((back - xi).abs() < 1e-10, "xi = {xi}, M = {}", spec.mass());
        }
    }

    #[test]
    fn log_stick_pair_matches_direct() {
        for &eps in &[-5.0, -1.0, 0.0, 0.3, 2.0, 6.0] {
            for &m in &[0.5, 1.0, 5.0] {
                let spec = CopulaSpec::new(m).unwrap();
                let xi = copula_transform(eps, spec);
                let (lx, lr) = log_stick_pair(eps, m);
                assert!((lx.exp() - xi).abs() < 1e-12);
                assert!((lr.exp() - (1.0 - xi)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conditional_sample_is_uniform_when_independent() {
        let spec = CopulaSpec::new(1.0).unwrap();
        let mut r = rng(8);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| conditional_xi_sample(0.3, 0.0, spec, &mut r).unwrap())
            .collect();
        assert!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).passes(0.01));
    }

    #[test]
    fn conditional_sample_degenerates_near_unit_psi() {
        let spec = CopulaSpec::new(1.0).unwrap();
        let mut r = rng(9);
        for _ in 0..100 {
            let x = conditional_xi_sample(0.7, 1.0 - 1e-9, spec, &mut r).unwrap();
            assert!((x - 0.7).abs() < 1e-3);
        }
        assert!(conditional_xi_sample(0.0, 0.5, spec, &mut r).is_err());
        assert!(conditional_xi_sample(0.5, 1.0, spec, &mut r).is_err());
    }

    #[test]
    fn conditional_mean_matches_quadrature() {
        // Oracle: integrate ξ(Z) against the Gaussian law of Z on a fine grid.
        let spec = CopulaSpec::new(1.0).unwrap();
        let (psi, prev) = (0.9, 0.9);
        let centre = psi * statrs_quantile(1.0 - (1.0 - prev));
        let sd = (1.0 - psi * psi).sqrt();
        let n = 20_000;
        let (lo, hi) = (centre - 10.0 * sd, centre + 10.0 * sd);
        let h = (hi - lo) / n as f64;
        let mut expected = 0.0;
        for i in 0..=n {
            let z = lo + i as f64 * h;
            let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
            let dens = (-(z - centre).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
            expected += wt * h * dens * statrs_cdf(z);
        }
        let mut r = rng(10);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| conditional_xi_sample(prev, psi, spec, &mut r).unwrap())
            .collect();
        assert!((mean(&draws) - expected).abs() < 0.005, "{} vs {expected}", mean(&draws));
    }

    fn statrs_cdf(x: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        Normal::new(0.0, 1.0).unwrap().cdf(x)
    }

    fn statrs_quantile(p: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
    }

    #[test]
    fn taddy_stationary_chain() {
        let process = Taddy::new(0.5, 1.0).unwrap();
        let mut r = rng(11);
        let mut state = process.initial(&mut r);
        let mut chain = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            chain.push(state);
            state = process.transition(&state, &mut r);
        }
        let lag1 = correlation(&chain[..chain.len() - 1], &chain[1..]);
        assert!((lag1 - 1.0 / 3.0).abs() < 0.02, "{lag1}");
        // Thin the chain to remove serial dependence before the KS check.
        let thinned: Vec<f64> = chain.iter().step_by(10).copied().collect();
        assert!(ks_one_sample(&thinned, |x| x.clamp(0.0, 1.0)).passes(0.01));
    }

    #[test]
    fn taddy_boundaries() {
        assert_eq!(taddy_update(0.0, 1.0, 0.3), 0.0);
        assert!(taddy_xi_step(0.5, 0.0, 1.0, &mut rng(0)).is_err());
        assert!(taddy_xi_step(0.5, -0.5, 1.0, &mut rng(0)).is_err());
        assert!(Taddy::new(1.0, 1.0).is_err());
    }

    #[test]
    fn taddy_autocorrelation_formula() {
        assert!((taddy_autocorrelation(0.5, 1.0, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((taddy_autocorrelation(0.5, 1.0, 2).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(taddy_autocorrelation(1e-12, 1.0, 1).unwrap() < 1e-11);
        assert!(taddy_autocorrelation(0.5, 1.0, 0).is_err());
    }

    #[test]
    fn dyk_zero_latents_give_zero_stick() {
        assert_eq!(dyk_xi(0.0, 0.0, 3.0), 0.0);
    }

    #[test]
    fn dyk_marginal_and_positive_dependence() {
        let mut r = rng(12);
        let spec = CopulaSpec::new(2.0).unwrap();
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                let e: f64 = StandardNormal.sample(&mut r);
                dyk_xi(z, e, 2.0)
            })
            .collect();
        assert!(ks_one_sample(&xs, |x| spec.beta_cdf(x)).passes(0.01));

        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..100_000 {
            let path = dyk_xi_path(0.0, 2.0, 2, 1, &mut r).unwrap();
            a.push(path[0]);
            b.push(path[1]);
        }
        assert!(correlation(&a, &b) > 0.05);
        assert!(dyk_xi_path(1.0, 2.0, 2, 1, &mut r).is_err());
    }

    #[test]
    fn dyk_has_no_path_density() {
        let p = DeYoreoKottas::new(0.2, 1.0).unwrap();
        assert!(p.path_log_density(&[DykState { zeta: 0.1, eta: 0.2 }]).is_none());
        let a = Ar1Dp::new(0.2, 1.0).unwrap();
        assert!(a.path_log_density(&[0.1, 0.2]).is_some());
    }

    #[test]
    fn kind_validation() {
        assert!(WeightProcessKind::Taddy.validate(-0.5, 1.0).is_err());
        assert!(WeightProcessKind::Ar1Dp.validate(-0.5, 1.0).is_ok());
        assert!(WeightProcessKind::DeYoreoKottas.validate(-0.5, 1.0).is_ok());
        assert!(WeightProcessKind::Ar1Dp.validate(0.5, -1.0).is_err());
    }
}
