//! Truncated stick-breaking measures and DP partition arithmetic.

use crate::error::{invalid, Error, Result};
use crate::prior::{log_stick_pair, simulate_sticks_of_kind, EpsPath, WeightProcessKind};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Truncation used by the applications.
pub const DEFAULT_TRUNCATION: usize = 50;

/// T × J matrix of mixture weights; each row is a probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    horizon: usize,
    components: usize,
    weights: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(horizon: usize, components: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != horizon * components {
            return Err(Error::Dimension(format!(
                "weight matrix {horizon} x {components} given {} values",
                weights.len()
            )));
        }
        let m = Self {
            horizon,
            components,
            weights,
        };
        for t in 0..horizon {
            let row = m.row(t);
            if row.iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::Numerical(format!("row {t} has a negative weight")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(Error::Numerical(format!("row {t} sums to {s}")));
            }
        }
        Ok(m)
    }

    /// Stick-breaks every row of a T × (J − 1) row-major stick matrix.
    pub fn from_sticks(horizon: usize, components: usize, sticks: &[f64]) -> Result<Self> {
        if components < 2 || sticks.len() != horizon * (components - 1) {
            return Err(Error::Dimension(format!(
                "need T x (J - 1) = {horizon} x {} sticks, got {}",
                components.saturating_sub(1),
                sticks.len()
            )));
        }
        let mut weights = Vec::with_capacity(horizon * components);
        for row in sticks.chunks(components - 1) {
            weights.extend(stick_break(row, components)?);
        }
        Ok(Self {
            horizon,
            components,
            weights,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.weights[t * self.components..(t + 1) * self.components]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// w₁ = ξ₁, wⱼ = ξⱼ ∏_{l<j}(1 − ξₗ), and w_J takes the remaining mass.
pub fn stick_break(xi: &[f64], components: usize) -> Result<Vec<f64>> {
    if components < 2 || xi.len() != components - 1 {
        return Err(Error::Dimension(format!(
            "J = {components} needs {} sticks, got {}",
            components.saturating_sub(1),
            xi.len()
        )));
    }
    let mut out = Vec::with_capacity(components);
    let mut rest = 1.0;
    for &x in xi {
        if !(x > 0.0 && x < 1.0) {
            return Err(invalid("xi", x, "sticks must lie strictly inside (0, 1)"));
        }
        out.push(x * rest);
        rest *= 1.0 - x;
    }
    out.push(rest);
    Ok(out)
}

/// Log-weights from per-stick (log ξ, log(1 − ξ)) pairs, written into `out`
/// (length J). Only the first `upto` entries are filled; pass J for all.
#[inline]
pub fn log_stick_break_into(log_xi: &[f64], log_rest: &[f64], upto: usize, out: &mut [f64]) {
    let last = log_xi.len();
    let mut acc = 0.0;
    for h in 0..upto {
        if h < last {
            out[h] = log_xi[h] + acc;
            acc += log_rest[h];
        } else {
            out[h] = acc;
        }
    }
}

/// Weights implied by a latent path: ξ = copula(ε; M) per stick, then stick-breaking.
///
/// Evaluated in log space so sticks that round to 0 or 1 stay well defined.
pub fn weights_from_eps(eps: &EpsPath, mass: f64) -> WeightMatrix {
    let sticks = eps.sticks();
    let components = sticks + 1;
    let mut weights = Vec::with_capacity(eps.horizon() * components);
    let mut log_xi = vec![0.0; sticks];
    let mut log_rest = vec![0.0; sticks];
    let mut log_w = vec![0.0; components];
    for t in 0..eps.horizon() {
        for (l, &e) in eps.row(t).iter().enumerate() {
            let (a, b) = log_stick_pair(e, mass);
            log_xi[l] = a;
            log_rest[l] = b;
        }
        log_stick_break_into(&log_xi, &log_rest, components, &mut log_w);
        weights.extend(log_w.iter().map(|v| v.exp()));
    }
    WeightMatrix {
        horizon: eps.horizon(),
        components,
        weights,
    }
}

/// Simulates sticks from the chosen process and stick-breaks each time slice.
pub fn sample_weight_paths<R: Rng + ?Sized>(
    kind: WeightProcessKind,
    psi: f64,
    mass: f64,
    horizon: usize,
    components: usize,
    rng: &mut R,
) -> Result<WeightMatrix> {
    if components < 2 {
        return Err(Error::Dimension(format!("truncation J must be >= 2, got {components}")));
    }
    let sticks = simulate_sticks_of_kind(kind, psi, mass, horizon, components - 1, rng)?;
    // Sticks equal to 0 or 1 in floating point are legal limits here.
    let sticks: Vec<f64> = sticks
        .into_iter()
        .map(|x| x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
        .collect();
    WeightMatrix::from_sticks(horizon, components, &sticks)
}

/// log of M^k ∏(nᵢ − 1)! / ∏_{i<n}(M + i).
pub fn eppf_log_prob(block_sizes: &[usize], mass: f64) -> Result<f64> {
    if block_sizes.is_empty() {
        return Err(Error::Dimension("EPPF needs at least one block".into()));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(invalid("M", mass, "total mass must be positive"));
    }
    if block_sizes.contains(&0) {
        return Err(Error::Dimension("block sizes must be positive".into()));
    }
    let n: usize = block_sizes.iter().sum();
    let mut lp = block_sizes.len() as f64 * mass.ln();
    for &size in block_sizes {
        lp += (1..size).map(|i| (i as f64).ln()).sum::<f64>();
    }
    lp -= (0..n).map(|i| (mass + i as f64).ln()).sum::<f64>();
    Ok(lp)
}

/// Prior mean of the number of occupied blocks among `n` draws.
pub fn expected_num_clusters(n: usize, mass: f64) -> f64 {
    (1..=n).map(|i| mass / (mass + i as f64 - 1.0)).sum()
}

/// A partition of `0..n`, stored as block labels canonicalised by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    num_blocks: usize,
}

impl Partition {
    /// Relabels arbitrary ids so that blocks are numbered 0, 1, ... in order of first appearance.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(raw: &[L]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self {
            labels,
            num_blocks: map.len(),
        }
    }

    pub fn one_block(n: usize) -> Self {
        Self::from_labels(&vec![0usize; n])
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_blocks];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Unit indices grouped by block.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Every partition of `0..n` as restricted growth strings (Bell(n) of them).
pub fn enumerate_partitions(n: usize) -> Vec<Partition> {
    if n == 0 {
        return vec![Partition::from_labels::<usize>(&[])];
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn recurse(pos: usize, max: usize, labels: &mut [usize], out: &mut Vec<Partition>) {
        if pos == labels.len() {
            out.push(Partition {
                labels: labels.to_vec(),
                num_blocks: max + 1,
            });
            return;
        }
        for l in 0..=max + 1 {
            labels[pos] = l;
            recurse(pos + 1, max.max(l), labels, out);
        }
    }
    recurse(1, 0, &mut labels, &mut out);
    out
}

/// Sequential Chinese-restaurant draw of a partition of `0..n`.
pub fn crp_sample<R: Rng + ?Sized>(n: usize, mass: f64, rng: &mut R) -> Partition {
    let mut labels = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::new();
    for i in 0..n {
        let u = rng.gen::<f64>() * (i as f64 + mass);
        let mut acc = 0.0;
        let mut chosen = sizes.len();
        for (k, &s) in sizes.iter().enumerate() {
            acc += s as f64;
            if u < acc {
                chosen = k;
                break;
            }
        }
        if chosen == sizes.len() {
            sizes.push(0);
        }
        sizes[chosen] += 1;
        labels.push(chosen);
    }
    Partition { labels, num_blocks: sizes.len() }
}

/// Draws `n` iid component indices from one probability vector.
pub fn sample_from_weights<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| categorical(weights, rng)).collect()
}

/// Inverse-CDF draw from an (approximately) normalised probability vector.
#[inline]
pub(crate) fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // Floating-point slack: fall back to the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}
