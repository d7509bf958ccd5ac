//! Conditional SMC over the latent ε-paths given the allocations.
//!
//! Particles are proposed from the AR(1) prior, so the incremental weight at
//! time t is the allocation likelihood ∏ⱼ w_{t,s_tj}(εₜʳ). One reference
//! trajectory is kept fixed through the sweep; the returned trajectory is
//! drawn from the final normalised weights and traced back through the
//! ancestor indices. A sweep runs either over whole rows of sticks or
//! separately for every stick column.

use super::config::Resampling;
use crate::error::{Error, Result};
use crate::logspace::{logsumexp, normalize_in_place};
use crate::mixture::AllocationState;
use crate::prior::{log_stick_pair, Ar1Params, EpsPath};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Multinomial resampling: `count` iid ancestor draws from `weights`.
pub fn multinomial_resample<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let cdf = cumulative(weights)?;
    Ok((0..count).map(|_| search(&cdf, rng.gen::<f64>())).collect())
}

/// Systematic resampling with one shared uniform offset.
pub fn systematic_resample<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let cdf = cumulative(weights)?;
    let u0 = rng.gen::<f64>();
    Ok((0..count)
        .map(|i| search(&cdf, (i as f64 + u0) / count as f64))
        .collect())
}

fn cumulative(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::Dimension("cannot resample from an empty weight vector".into()));
    }
    if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Numerical(format!("negative or NaN resampling weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Numerical(format!("resampling weights sum to {total}")));
    }
    let mut acc = 0.0;
    Ok(weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect())
}

#[inline]
fn search(cdf: &[f64], u: f64) -> usize {
    let idx = cdf.partition_point(|&c| c <= u);
    // Skip zero-weight entries that share the same cumulative value.
    idx.min(cdf.len() - 1)
}

/// Per-time allocation counts in the form the particle weights need:
/// Σ_h n_h log w_h = Σ_l [n_l log ξ_l + n_{>l} log(1 − ξ_l)].
#[derive(Debug, Clone)]
pub struct StickCounts {
    sticks: usize,
    own: Vec<Vec<f64>>,
    beyond: Vec<Vec<f64>>,
}

impl StickCounts {
    pub fn new(alloc: &AllocationState, components: usize) -> Self {
        let sticks = components - 1;
        let mut own = Vec::with_capacity(alloc.horizon());
        let mut beyond = Vec::with_capacity(alloc.horizon());
        for t in 0..alloc.horizon() {
            let counts = alloc.counts(t, components);
            let last_used = counts.iter().rposition(|&c| c > 0).map_or(0, |h| h + 1);
            let active = last_used.min(sticks);
            let mut tail = 0.0;
            let mut b = vec![0.0; active];
            for l in (0..active).rev() {
                tail += counts[l + 1] as f64;
                if l + 1 == active {
                    tail += counts[active + 1..].iter().map(|&c| c as f64).sum::<f64>();
                }
                b[l] = tail;
            }
            own.push(counts[..active].iter().map(|&c| c as f64).collect());
            beyond.push(b);
        }
        Self { sticks, own, beyond }
    }

    pub fn horizon(&self) -> usize {
        self.own.len()
    }

    /// log ∏ⱼ w_{t, s_tj} for one particle row at time `t`.
    #[inline]
    pub fn log_weight(&self, t: usize, row: &[f64], mass: f64) -> f64 {
        debug_assert_eq!(row.len(), self.sticks);
        let mut lw = 0.0;
        for (l, (&n, &b)) in self.own[t].iter().zip(&self.beyond[t]).enumerate() {
            let (log_xi, log_rest) = log_stick_pair(row[l], mass);
            if n > 0.0 {
                lw += n * log_xi;
            }
            if b > 0.0 {
                lw += b * log_rest;
            }
        }
        lw
    }

    /// Contribution of stick `l` at time `t` to [`Self::log_weight`].
    #[inline]
    pub fn stick_log_weight(&self, t: usize, l: usize, eps: f64, mass: f64) -> f64 {
        let (Some(&n), Some(&b)) = (self.own[t].get(l), self.beyond[t].get(l)) else {
            return 0.0;
        };
        let (log_xi, log_rest) = log_stick_pair(eps, mass);
        let mut lw = 0.0;
        if n > 0.0 {
            lw += n * log_xi;
        }
        if b > 0.0 {
            lw += b * log_rest;
        }
        lw
    }

    /// Σ_t log ∏ⱼ w_{t, s_tj}(ε_t) for a whole path.
    pub fn path_log_likelihood(&self, eps: &EpsPath, mass: f64) -> f64 {
        (0..self.horizon()).map(|t| self.log_weight(t, eps.row(t), mass)).sum()
    }
}

/// Settings for one conditional SMC sweep.
#[derive(Debug, Clone, Copy)]
pub struct SmcSettings {
    pub num_particles: usize,
    pub resampling: Resampling,
    pub parallel: bool,
}

/// All particles of one sweep. Rows are stored per time as R × L blocks.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    pub num_particles: usize,
    pub sticks: usize,
    pub particles: Vec<Vec<f64>>,
    pub log_weights: Vec<Vec<f64>>,
    pub normalized_weights: Vec<Vec<f64>>,
    /// `ancestors[t - 1][r]` is the parent at time t − 1 of particle r at time t.
    pub ancestors: Vec<Vec<usize>>,
    /// Indices of the reference trajectory that was held fixed.
    pub reference_lineage: Vec<usize>,
}

impl ParticleSystem {
    pub fn horizon(&self) -> usize {
        self.particles.len()
    }

    pub fn row(&self, t: usize, r: usize) -> &[f64] {
        &self.particles[t][r * self.sticks..(r + 1) * self.sticks]
    }

    /// Trajectory ending in particle `last` at the final time, with its lineage.
    pub fn trajectory(&self, last: usize) -> (EpsPath, Vec<usize>) {
        let horizon = self.horizon();
        let mut lineage = vec![0; horizon];
        lineage[horizon - 1] = last;
        for t in (1..horizon).rev() {
            lineage[t - 1] = self.ancestors[t - 1][lineage[t]];
        }
        let mut path = EpsPath::zeros(horizon, self.sticks);
        for (t, &r) in lineage.iter().enumerate() {
            path.row_mut(t).copy_from_slice(self.row(t, r));
        }
        (path, lineage)
    }

    /// Σ_t log[(1/R) Σ_r ω_t^r], the SMC estimate of log p(s_{1:T}).
    pub fn log_marginal_likelihood(&self) -> f64 {
        smc_marginal_likelihood(self)
    }
}

/// Σ_t log[(1/R) Σ_r ω_t^r] from the unnormalised log-weights.
pub fn smc_marginal_likelihood(system: &ParticleSystem) -> f64 {
    let log_r = (system.num_particles as f64).ln();
    system
        .log_weights
        .iter()
        .map(|lw| logsumexp(lw) - log_r)
        .sum()
}

/// Output of one conditional SMC sweep.
#[derive(Debug, Clone)]
pub struct SmcOutput {
    pub system: ParticleSystem,
    pub path: EpsPath,
    pub lineage: Vec<usize>,
}

/// Source of the random numbers used to fill particle rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Streams {
    /// One generator stream per particle, seeded from the caller's generator,
    /// so the result does not depend on whether rows are filled in parallel.
    PerParticle,
    /// Rows drawn in order from the caller's generator. Cheaper when each row
    /// holds a single value.
    Shared,
}

/// Fills R rows of `width` values, the reference slot excepted.
fn fill_rows<R, F>(
    block: &mut [f64],
    width: usize,
    reference: usize,
    streams: Streams,
    parallel: bool,
    rng: &mut R,
    fill: F,
) where
    R: Rng + ?Sized,
    F: Fn(usize, &mut [f64], &mut dyn RngCore) + Sync,
{
    match streams {
        Streams::Shared => {
            let mut shared = RngAdapter(rng);
            for (r, row) in block.chunks_mut(width).enumerate() {
                if r != reference {
                    fill(r, row, &mut shared);
                }
            }
        }
        Streams::PerParticle => {
            let seed: u64 = rng.gen();
            let work = |(r, row): (usize, &mut [f64])| {
                if r == reference {
                    return;
                }
                let mut prng = ChaCha8Rng::seed_from_u64(seed);
                prng.set_stream(r as u64);
                fill(r, row, &mut prng);
            };
            if parallel {
                block.par_chunks_mut(width).enumerate().for_each(work);
            } else {
                block.chunks_mut(width).enumerate().for_each(work);
            }
        }
    }
}

/// Exposes a possibly unsized generator as a sized `RngCore`.
struct RngAdapter<'a, R: Rng + ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

fn weigh<W>(block: &[f64], width: usize, t: usize, parallel: bool, log_weight: &W) -> Vec<f64>
where
    W: Fn(usize, &[f64]) -> f64 + Sync,
{
    if parallel {
        block.par_chunks(width).map(|row| log_weight(t, row)).collect()
    } else {
        block.chunks(width).map(|row| log_weight(t, row)).collect()
    }
}

fn check_inputs(reference: &EpsPath, lineage: &[usize], expected_len: usize, num: usize, mass: f64) -> Result<()> {
    if num == 0 {
        return Err(Error::Config("conditional SMC needs at least one particle".into()));
    }
    if lineage.len() != expected_len || lineage.iter().any(|&b| b >= num) {
        return Err(Error::Dimension(format!(
            "reference lineage of length {} invalid for {num} particles (expected length {expected_len})",
            lineage.len()
        )));
    }
    if reference.values().iter().any(|v| !v.is_finite()) || !mass.is_finite() {
        return Err(Error::Numerical("non-finite conditional SMC input".into()));
    }
    Ok(())
}

/// Particle system of one sweep over rows of `width` values. `reference`
/// yields the retained row at each time and `log_weight(t, row)` the
/// incremental log weight.
#[allow(clippy::too_many_arguments)]
fn run_system<'a, R, F, W>(
    ar: Ar1Params,
    horizon: usize,
    width: usize,
    reference: F,
    lineage: &[usize],
    settings: &SmcSettings,
    streams: Streams,
    rng: &mut R,
    log_weight: W,
) -> Result<ParticleSystem>
where
    R: Rng + ?Sized,
    F: Fn(usize) -> &'a [f64],
    W: Fn(usize, &[f64]) -> f64 + Sync,
{
    let num = settings.num_particles;
    let sd = ar.innovation_sd();
    let parallel = settings.parallel;
    let mut particles: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let mut log_weights = Vec::with_capacity(horizon);
    let mut normalized: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let mut ancestors: Vec<Vec<usize>> = Vec::with_capacity(horizon.saturating_sub(1));

    for t in 0..horizon {
        let b = lineage[t];
        let mut block = vec![0.0; num * width];
        block[b * width..(b + 1) * width].copy_from_slice(reference(t));
        if t == 0 {
            let fill = |_: usize, row: &mut [f64], prng: &mut dyn RngCore| {
                row.iter_mut().for_each(|e| *e = StandardNormal.sample(prng));
            };
            fill_rows(&mut block, width, b, streams, parallel, rng, fill);
        } else {
            let mut parents = match settings.resampling {
                Resampling::Multinomial => multinomial_resample(&normalized[t - 1], num, rng)?,
                Resampling::Systematic => systematic_resample(&normalized[t - 1], num, rng)?,
            };
            parents[b] = lineage[t - 1];
            let prev = &particles[t - 1];
            let psi = ar.psi();
            let fill = |r: usize, row: &mut [f64], prng: &mut dyn RngCore| {
                let parent = &prev[parents[r] * width..(parents[r] + 1) * width];
                for (e, &p) in row.iter_mut().zip(parent) {
                    let z: f64 = StandardNormal.sample(prng);
                    *e = psi * p + sd * z;
                }
            };
            fill_rows(&mut block, width, b, streams, parallel, rng, fill);
            ancestors.push(parents);
        }
        let lw = weigh(&block, width, t, parallel, &log_weight);
        if lw.iter().any(|v| v.is_nan()) {
            return Err(Error::Numerical(format!("NaN particle weight at t = {t}")));
        }
        let mut norm = lw.clone();
        normalize_in_place(&mut norm);
        particles.push(block);
        log_weights.push(lw);
        normalized.push(norm);
    }
    Ok(ParticleSystem {
        num_particles: num,
        sticks: width,
        particles,
        log_weights,
        normalized_weights: normalized,
        ancestors,
        reference_lineage: lineage.to_vec(),
    })
}

/// One conditional SMC sweep targeting p_ψ(ε_{1:T} | s_{1:T}), with every
/// particle carrying all J − 1 sticks of a time point.
///
/// `reference` and `lineage` identify the retained trajectory; the returned
/// trajectory is drawn from the final normalised weights.
pub fn conditional_smc<R: Rng + ?Sized>(
    alloc: &AllocationState,
    components: usize,
    psi: f64,
    mass: f64,
    reference: &EpsPath,
    lineage: &[usize],
    settings: &SmcSettings,
    rng: &mut R,
) -> Result<SmcOutput> {
    let counts = StickCounts::new(alloc, components);
    conditional_smc_with_counts(&counts, psi, mass, reference, lineage, settings, rng)
}

fn check_counts(counts: &StickCounts, reference: &EpsPath) -> Result<()> {
    if counts.horizon() != reference.horizon() || counts.sticks != reference.sticks() {
        return Err(Error::Dimension(format!(
            "reference path is {} x {}, allocations imply {} x {}",
            reference.horizon(),
            reference.sticks(),
            counts.horizon(),
            counts.sticks
        )));
    }
    Ok(())
}

/// [`conditional_smc`] with precomputed allocation counts.
pub fn conditional_smc_with_counts<R: Rng + ?Sized>(
    counts: &StickCounts,
    psi: f64,
    mass: f64,
    reference: &EpsPath,
    lineage: &[usize],
    settings: &SmcSettings,
    rng: &mut R,
) -> Result<SmcOutput> {
    let ar = Ar1Params::new(psi)?;
    let num = settings.num_particles;
    check_inputs(reference, lineage, reference.horizon(), num, mass)?;
    check_counts(counts, reference)?;
    let system = run_system(
        ar,
        reference.horizon(),
        reference.sticks(),
        |t| reference.row(t),
        lineage,
        settings,
        Streams::PerParticle,
        rng,
        |t, row| counts.log_weight(t, row, mass),
    )?;
    let last = multinomial_resample(&system.normalized_weights[reference.horizon() - 1], 1, rng)?[0];
    let (path, lineage) = system.trajectory(last);
    Ok(SmcOutput { system, path, lineage })
}

/// Result of a stick-by-stick conditional SMC sweep.
#[derive(Debug, Clone)]
pub struct StickwiseOutput {
    pub path: EpsPath,
    /// Lineage of stick l at time t stored at `l * T + t`.
    pub lineage: Vec<usize>,
    /// Sum over sticks of the per-stick SMC log evidence estimates.
    pub log_evidence: f64,
}

/// Conditional SMC run separately for every stick column.
///
/// Given the allocations, the posterior of ε factorises over l into T-step
/// AR(1) chains with likelihood ∏_t ξ_tl^{n_tl} (1 − ξ_tl)^{n_t,>l}, so each
/// column gets its own particle system. Each system moves a single scalar
/// per time step, which keeps the particle weights from degenerating as J
/// grows. Column systems draw their generators from seeds taken off `rng`
/// in order, so the result is the same with or without `parallel`.
pub fn conditional_smc_stickwise<R: Rng + ?Sized>(
    counts: &StickCounts,
    psi: f64,
    mass: f64,
    reference: &EpsPath,
    lineage: &[usize],
    settings: &SmcSettings,
    rng: &mut R,
) -> Result<StickwiseOutput> {
    let ar = Ar1Params::new(psi)?;
    let num = settings.num_particles;
    let horizon = reference.horizon();
    let sticks = reference.sticks();
    check_inputs(reference, lineage, horizon * sticks, num, mass)?;
    check_counts(counts, reference)?;
    let seeds: Vec<u64> = (0..sticks).map(|_| rng.gen()).collect();
    let inner = SmcSettings {
        parallel: false,
        ..*settings
    };
    let column = |l: usize| -> Result<(Vec<f64>, Vec<usize>, f64)> {
        let mut crng = ChaCha8Rng::seed_from_u64(seeds[l]);
        let values = reference.column(l);
        let refs: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        let system = run_system(
            ar,
            horizon,
            1,
            |t| &refs[t][..],
            &lineage[l * horizon..(l + 1) * horizon],
            &inner,
            Streams::Shared,
            &mut crng,
            |t, row| counts.stick_log_weight(t, l, row[0], mass),
        )?;
        let last = multinomial_resample(&system.normalized_weights[horizon - 1], 1, &mut crng)?[0];
        let (path, lin) = system.trajectory(last);
        Ok((path.values().to_vec(), lin, system.log_marginal_likelihood()))
    };
    let columns: Vec<Result<(Vec<f64>, Vec<usize>, f64)>> = if settings.parallel {
        (0..sticks).into_par_iter().map(column).collect()
    } else {
        (0..sticks).map(column).collect()
    };
    let mut path = EpsPath::zeros(horizon, sticks);
    let mut new_lineage = Vec::with_capacity(horizon * sticks);
    let mut log_evidence = 0.0;
    for (l, c) in columns.into_iter().enumerate() {
        let (values, lin, ev) = c?;
        for (t, v) in values.into_iter().enumerate() {
            path.set(t, l, v);
        }
        new_lineage.extend(lin);
        log_evidence += ev;
    }
    Ok(StickwiseOutput {
        path,
        lineage: new_lineage,
        log_evidence,
    })
}
