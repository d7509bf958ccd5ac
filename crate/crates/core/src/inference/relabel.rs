//! Label-swap Metropolis–Hastings moves.
//!
//! Stick-breaking weights are ordered, so a Gibbs sampler that only updates
//! atoms, allocations and sticks conditionally can leave a cluster parked at a
//! late stick for the whole run. These moves exchange two component labels,
//! either carrying the atoms and allocations only (sticks fixed) or carrying
//! the latent stick paths along as well. Both are involutions that leave the
//! prior of atoms and sticks unchanged, so the acceptance ratio involves only
//! the weights of the allocated components.

use super::config::SmcBlocking;
use super::sampler::ChainState;
use crate::error::Result;
use crate::measure::weights_from_eps;
use rand::Rng;

/// Accepted moves of each kind in one call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SwapCounts {
    pub atoms: usize,
    pub sticks: usize,
}

/// `n ln w`, taking an empty component to contribute nothing.
fn term(n: u32, log_w: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * log_w
    }
}

/// Σ_t Σ_l n_tl ln w_tl.
pub fn allocation_log_weight(counts: &[Vec<u32>], log_w: &[f64], components: usize) -> f64 {
    counts
        .iter()
        .enumerate()
        .map(|(t, row)| {
            row.iter()
                .enumerate()
                .map(|(l, &n)| term(n, log_w[t * components + l]))
                .sum::<f64>()
        })
        .sum()
}

/// Change in Σ_t Σ_l n_tl ln w_tl when the allocations of `a` and `b` are
/// exchanged and the weights stay put.
pub fn atom_swap_log_ratio(counts: &[Vec<u32>], log_w: &[f64], components: usize, a: usize, b: usize) -> f64 {
    counts
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let (la, lb) = (log_w[t * components + a], log_w[t * components + b]);
            term(row[b], la) + term(row[a], lb) - term(row[a], la) - term(row[b], lb)
        })
        .sum()
}

/// Picks an occupied label among `0..range`, then a different label in the
/// same range, both uniformly. The probability of proposing a given pair is
/// unchanged by the swap, so the proposal is symmetric.
fn propose_pair<R: Rng + ?Sized>(occupied: &[usize], range: usize, rng: &mut R) -> Option<(usize, usize)> {
    if occupied.is_empty() || range < 2 {
        return None;
    }
    let a = occupied[rng.gen_range(0..occupied.len())];
    let mut b = rng.gen_range(0..range - 1);
    if b >= a {
        b += 1;
    }
    Some((a, b))
}

fn occupied_labels(counts: &[Vec<u32>], range: usize) -> Vec<usize> {
    (0..range).filter(|&l| counts.iter().any(|row| row[l] > 0)).collect()
}

fn swap_lineage(lineage: &mut [usize], blocking: SmcBlocking, horizon: usize, a: usize, b: usize) {
    if blocking == SmcBlocking::PerStick {
        for t in 0..horizon {
            lineage.swap(a * horizon + t, b * horizon + t);
        }
    }
}

/// Runs `attempts` moves of each kind on the chain state. Weights stay
/// coherent with (ε, M) throughout.
pub fn label_swap_moves<R: Rng + ?Sized>(
    state: &mut ChainState,
    blocking: SmcBlocking,
    attempts: usize,
    rng: &mut R,
) -> Result<SwapCounts> {
    let components = state.weights.components();
    let horizon = state.eps.horizon();
    let sticks = state.eps.sticks();
    let mut counts: Vec<Vec<u32>> = (0..horizon).map(|t| state.alloc.counts(t, components)).collect();
    let mut log_w: Vec<f64> = state.weights.as_slice().iter().map(|w| w.ln()).collect();
    let mut accepted = SwapCounts::default();

    for _ in 0..attempts {
        let occupied = occupied_labels(&counts, components);
        if let Some((a, b)) = propose_pair(&occupied, components, rng) {
            let log_ratio = atom_swap_log_ratio(&counts, &log_w, components, a, b);
            if rng.gen::<f64>().ln() < log_ratio {
                state.alloc.swap_labels(a, b);
                state.comps.mu.swap(a, b);
                state.comps.tau.swap(a, b);
                counts.iter_mut().for_each(|row| row.swap(a, b));
                accepted.atoms += 1;
            }
        }

        let occupied = occupied_labels(&counts, sticks);
        if let Some((a, b)) = propose_pair(&occupied, sticks, rng) {
            let mut eps = state.eps.clone();
            eps.swap_columns(a, b);
            let weights = weights_from_eps(&eps, state.mass);
            let new_log_w: Vec<f64> = weights.as_slice().iter().map(|w| w.ln()).collect();
            let mut new_counts = counts.clone();
            new_counts.iter_mut().for_each(|row| row.swap(a, b));
            let log_ratio = allocation_log_weight(&new_counts, &new_log_w, components)
                - allocation_log_weight(&counts, &log_w, components);
            if rng.gen::<f64>().ln() < log_ratio {
                state.eps = eps;
                state.weights = weights;
                state.alloc.swap_labels(a, b);
                state.comps.mu.swap(a, b);
                state.comps.tau.swap(a, b);
                swap_lineage(&mut state.lineage, blocking, horizon, a, b);
                counts = new_counts;
                log_w = new_log_w;
                accepted.sticks += 1;
            }
        }
    }
    Ok(accepted)
}
