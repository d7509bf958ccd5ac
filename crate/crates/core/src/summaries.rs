//! Posterior summaries: co-clustering, Binder point partitions, cluster
//! labels, predictive density grids, Hellinger distances and scalar
//! parameter summaries.

use crate::error::{Error, Result};
use crate::inference::Trace;
use crate::measure::{enumerate_partitions, sample_weight_paths, Partition};
use crate::mixture::Dataset;
use crate::normal::HALF_LN_2PI;
use crate::prior::WeightProcessKind;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Pairwise same-cluster probabilities at one time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoClusteringMatrix {
    pub time: usize,
    pub n: usize,
    /// n × n, row-major.
    pub probs: Vec<f64>,
}

impl CoClusteringMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n..(i + 1) * self.n]
    }

    /// 0/1 matrix of a single partition.
    pub fn from_partition(time: usize, partition: &Partition) -> Self {
        coclustering_from_rows(time, partition.len(), [partition.labels()].into_iter())
            .expect("one partition is a non-empty sample")
    }
}

/// Co-clustering from any sequence of label vectors of length `n`.
pub fn coclustering_from_rows<'a, L, I>(time: usize, n: usize, rows: I) -> Result<CoClusteringMatrix>
where
    L: Copy + Eq + 'a,
    I: Iterator<Item = &'a [L]>,
{
    let mut counts = vec![0u64; n * n];
    let mut draws = 0u64;
    for row in rows {
        if row.len() != n {
            return Err(Error::Dimension(format!("label row has {} entries, expected {n}", row.len())));
        }
        for i in 0..n {
            counts[i * n + i] += 1;
            for j in i + 1..n {
                if row[i] == row[j] {
                    counts[i * n + j] += 1;
                    counts[j * n + i] += 1;
                }
            }
        }
        draws += 1;
    }
    if draws == 0 {
        return Err(Error::Data("co-clustering needs at least one draw".into()));
    }
    let d = draws as f64;
    Ok(CoClusteringMatrix {
        time,
        n,
        probs: counts.into_iter().map(|c| c as f64 / d).collect(),
    })
}

fn check_time(trace: &Trace, t: usize) -> Result<()> {
    if t >= trace.horizon {
        return Err(Error::Dimension(format!("time {t} out of range 0..{}", trace.horizon)));
    }
    if trace.is_empty() {
        return Err(Error::Data("trace has no retained draws".into()));
    }
    Ok(())
}

/// Fraction of retained draws in which units i and j share a component at time `t`.
pub fn coclustering(trace: &Trace, t: usize) -> Result<CoClusteringMatrix> {
    check_time(trace, t)?;
    coclustering_from_rows(t, trace.units, (0..trace.len()).map(|d| trace.alloc_row(d, t)))
}

/// Σ_{i<j} |1[i ~ j] − p_ij| with equal misclassification costs.
pub fn binder_loss(partition: &Partition, cc: &CoClusteringMatrix) -> f64 {
    let n = cc.n;
    let mut loss = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let same = if partition.same_block(i, j) { 1.0 } else { 0.0 };
            loss += (same - cc.get(i, j)).abs();
        }
    }
    loss
}

/// Candidate with the smallest Binder loss; ties go to fewer clusters, then
/// to the earlier candidate.
pub fn binder_partition(cc: &CoClusteringMatrix, candidates: &[Partition]) -> Result<(Partition, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in candidates.iter().enumerate() {
        if p.len() != cc.n {
            return Err(Error::Dimension(format!(
                "candidate partition covers {} units, matrix has {}",
                p.len(),
                cc.n
            )));
        }
        let loss = binder_loss(p, cc);
        let better = match best {
            None => true,
            Some((b, bl)) => {
                // Losses are sums of at most n²/2 terms; treat near-equal values as ties.
                let tol = 1e-12 * (1.0 + bl.abs());
                loss < bl - tol || ((loss - bl).abs() <= tol && p.num_blocks() < candidates[b].num_blocks())
            }
        };
        if better {
            best = Some((i, loss));
        }
    }
    let (i, loss) = best.ok_or_else(|| Error::Data("Binder search needs at least one candidate".into()))?;
    Ok((candidates[i].clone(), loss))
}

/// Distinct partitions visited at time `t`, in order of first occurrence.
pub fn sampled_partitions(trace: &Trace, t: usize) -> Result<Vec<Partition>> {
    check_time(trace, t)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for d in 0..trace.len() {
        let p = Partition::from_labels(trace.alloc_row(d, t));
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Largest n for which the full partition lattice is searched.
pub const EXHAUSTIVE_BINDER_MAX: usize = 10;

/// Binder minimiser over every partition of n ≤ 10 units.
pub fn binder_exhaustive(cc: &CoClusteringMatrix) -> Result<(Partition, f64)> {
    if cc.n > EXHAUSTIVE_BINDER_MAX {
        return Err(Error::Config(format!(
            "exhaustive Binder search supports n <= {EXHAUSTIVE_BINDER_MAX}, got {}",
            cc.n
        )));
    }
    binder_partition(cc, &enumerate_partitions(cc.n))
}

/// Binder point estimate at time `t` over the sampled partitions.
pub fn binder_from_trace(trace: &Trace, t: usize) -> Result<(Partition, f64)> {
    let cc = coclustering(trace, t)?;
    binder_partition(&cc, &sampled_partitions(trace, t)?)
}

/// Direction of a cluster on a signed bias scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterLabel {
    Man,
    Neutral,
    Woman,
}

impl ClusterLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Man => "man",
            Self::Neutral => "neutral",
            Self::Woman => "woman",
        }
    }
}

/// "man" when the mean is negative and 0 lies outside mean ± sd, "woman" for
/// the positive mirror case, "neutral" otherwise.
pub fn label_from_moments(mean: f64, sd: f64) -> ClusterLabel {
    if mean < 0.0 && mean + sd < 0.0 {
        ClusterLabel::Man
    } else if mean > 0.0 && mean - sd > 0.0 {
        ClusterLabel::Woman
    } else {
        ClusterLabel::Neutral
    }
}

/// Per-cluster description of a point partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub size: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 divisor); 0 for singletons.
    pub sd: f64,
    pub label: ClusterLabel,
}

/// Labels every block of `partition` using the observations at time `t`.
pub fn label_clusters(data: &Dataset, partition: &Partition, t: usize) -> Result<Vec<ClusterSummary>> {
    if t >= data.horizon() {
        return Err(Error::Dimension(format!("time {t} out of range 0..{}", data.horizon())));
    }
    if partition.len() != data.units() {
        return Err(Error::Dimension(format!(
            "partition covers {} units, data has {}",
            partition.len(),
            data.units()
        )));
    }
    Ok(partition
        .blocks()
        .into_iter()
        .enumerate()
        .map(|(cluster, members)| {
            let ys: Vec<f64> = members.iter().map(|&j| data.y(t, j)).collect();
            let size = ys.len();
            let mean = ys.iter().sum::<f64>() / size as f64;
            let sd = if size > 1 {
                (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (size - 1) as f64).sqrt()
            } else {
                0.0
            };
            ClusterSummary {
                cluster,
                size,
                mean,
                sd,
                label: label_from_moments(mean, sd),
            }
        })
        .collect())
}

/// Density values on an ordered grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub time: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Data("density grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Data("density grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Trapezoid rule on an arbitrary grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

/// Number of points in the default predictive grid.
pub const DEFAULT_GRID_POINTS: usize = 512;

/// Evenly spaced grid from min − 3 sd to max + 3 sd of `values`.
pub fn default_grid(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Data("cannot build a grid from no observations".into()));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let pad = if sd > 0.0 { 3.0 * sd } else { 1.0 };
    Ok(linspace(lo - pad, hi + pad, DEFAULT_GRID_POINTS))
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + i as f64 * step).collect()
}

/// Adds Σ_h w_h N(y; μ_h + offset, 1/(λ τ_h)) on `grid` into `out`.
pub fn add_mixture_density(
    weights: &[f64],
    mu: &[f64],
    tau: &[f64],
    kernel_scale: f64,
    offset: f64,
    grid: &[f64],
    out: &mut [f64],
) {
    for ((&w, &m), &t) in weights.iter().zip(mu).zip(tau) {
        if w <= 0.0 {
            continue;
        }
        let prec = kernel_scale * t;
        let log_norm = w.ln() + 0.5 * prec.ln() - HALF_LN_2PI;
        let centre = m + offset;
        for (o, &y) in out.iter_mut().zip(grid) {
            let d = y - centre;
            *o += (log_norm - 0.5 * prec * d * d).exp();
        }
    }
}

/// Posterior predictive density at time `t`, averaged over retained draws.
///
/// The covariate term is omitted unless a covariate profile x is supplied,
/// in which case every draw is shifted by x'β_t.
pub fn posterior_predictive_grid(
    trace: &Trace,
    t: usize,
    grid: &[f64],
    covariate_profile: Option<&[f64]>,
) -> Result<DensityGrid> {
    check_time(trace, t)?;
    check_grid(grid)?;
    if let Some(x) = covariate_profile {
        if x.len() != trace.covariate_dim {
            return Err(Error::Dimension(format!(
                "covariate profile has {} entries, model has {}",
                x.len(),
                trace.covariate_dim
            )));
        }
    }
    let scale = trace.prior.base.kernel_scale;
    let mut values = vec![0.0; grid.len()];
    for d in 0..trace.len() {
        let draw = &trace.draws[d];
        let offset = match (covariate_profile, trace.beta_row(d, t)) {
            (Some(x), Some(b)) => x.iter().zip(b).map(|(a, c)| a * c).sum(),
            _ => 0.0,
        };
        add_mixture_density(trace.weight_row(d, t), &draw.mu, &draw.tau, scale, offset, grid, &mut values);
    }
    let k = trace.len() as f64;
    values.iter_mut().for_each(|v| *v /= k);
    Ok(DensityGrid {
        time: t,
        grid: grid.to_vec(),
        values,
    })
}

/// √(½ ∫ (√f − √g)²) by the trapezoid rule, clipped to [0, 1].
pub fn hellinger_distance(f: &[f64], g: &[f64], grid: &[f64]) -> Result<f64> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "densities of length {} and {} on a grid of {}",
            f.len(),
            g.len(),
            grid.len()
        )));
    }
    check_grid(grid)?;
    if f.iter().chain(g).any(|v| !(*v >= 0.0)) {
        return Err(Error::Data("densities must be nonnegative".into()));
    }
    let sq: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).collect();
    Ok((0.5 * trapezoid(grid, &sq)).max(0.0).sqrt().min(1.0))
}

/// Settings for the prior drift study of f_t: fixed ψ and M, atoms uniform
/// on an interval, unit-variance Gaussian kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HellingerStudy {
    pub process: WeightProcessKind,
    pub psi: f64,
    pub mass: f64,
    pub truncation: usize,
    pub horizon: usize,
    pub replications: usize,
    pub atom_low: f64,
    pub atom_high: f64,
    pub grid_points: usize,
}

impl HellingerStudy {
    /// M = 10, J = 20, atoms on (−30, 30).
    pub fn new(psi: f64, horizon: usize, replications: usize) -> Self {
        Self {
            process: WeightProcessKind::Ar1Dp,
            psi,
            mass: 10.0,
            truncation: 20,
            horizon,
            replications,
            atom_low: -30.0,
            atom_high: 30.0,
            grid_points: 1441,
        }
    }
}

/// For each replication, d_H(f_t, f_1) for t = 2, …, T (index 0 holds t = 2).
pub fn prior_hellinger_study<R: Rng + ?Sized>(study: &HellingerStudy, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if study.replications == 0 || study.horizon < 2 {
        return Err(Error::Config("study needs replications >= 1 and T >= 2".into()));
    }
    if !(study.atom_high > study.atom_low) {
        return Err(Error::Config("atom interval is empty".into()));
    }
    study.process.validate(study.psi, study.mass)?;
    let grid = linspace(study.atom_low - 6.0, study.atom_high + 6.0, study.grid_points);
    let atoms = Uniform::new(study.atom_low, study.atom_high);
    let ones = vec![1.0; study.truncation];
    let mut out = Vec::with_capacity(study.replications);
    for _ in 0..study.replications {
        let w = sample_weight_paths(study.process, study.psi, study.mass, study.horizon, study.truncation, rng)?;
        let mu: Vec<f64> = (0..study.truncation).map(|_| atoms.sample(rng)).collect();
        let dens: Vec<Vec<f64>> = (0..study.horizon)
            .map(|t| {
                let mut f = vec![0.0; grid.len()];
                add_mixture_density(w.row(t), &mu, &ones, 1.0, 0.0, &grid, &mut f);
                f
            })
            .collect();
        let dists = (1..study.horizon)
            .map(|t| hellinger_distance(&dens[t], &dens[0], &grid))
            .collect::<Result<Vec<f64>>>()?;
        out.push(dists);
    }
    Ok(out)
}

/// Adjusted Rand index between two labelings of the same units.
pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension("partitions cover different numbers of units".into()));
    }
    let (ka, kb) = (a.num_blocks(), b.num_blocks());
    let mut table = vec![0u64; ka * kb];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        table[x * kb + y] += 1;
    }
    let choose2 = |m: u64| (m * m.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().map(|&m| choose2(m)).sum();
    let rows: f64 = a.block_sizes().iter().map(|&m| choose2(m as u64)).sum();
    let cols: f64 = b.block_sizes().iter().map(|&m| choose2(m as u64)).sum();
    let total = choose2(a.len() as u64);
    let expected = if total > 0.0 { rows * cols / total } else { 0.0 };
    let max = 0.5 * (rows + cols);
    if (max - expected).abs() < 1e-12 {
        // Both partitions trivial in the same way.
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Mean, median, central 95% interval and P(x > 0) of a scalar sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub mean: f64,
    pub median: f64,
    pub lower_95: f64,
    pub upper_95: f64,
    pub prob_positive: f64,
    pub draws: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn summarize_scalar(x: &[f64]) -> Result<ScalarSummary> {
    if x.is_empty() {
        return Err(Error::Data("cannot summarise an empty sample".into()));
    }
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    Ok(ScalarSummary {
        mean: x.iter().sum::<f64>() / x.len() as f64,
        median: quantile_sorted(&s, 0.5),
        lower_95: quantile_sorted(&s, 0.025),
        upper_95: quantile_sorted(&s, 0.975),
        prob_positive: x.iter().filter(|&&v| v > 0.0).count() as f64 / x.len() as f64,
        draws: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn cc_of(rows: &[Vec<u32>]) -> CoClusteringMatrix {
        coclustering_from_rows(0, rows[0].len(), rows.iter().map(|r| r.as_slice())).unwrap()
    }

    #[test]
    fn coclustering_examples() {
        let p = Partition::from_labels(&[0, 0, 1, 2, 1]);
        let cc = CoClusteringMatrix::from_partition(0, &p);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(cc.get(i, j), if p.same_block(i, j) { 1.0 } else { 0.0 });
            }
        }
        let single = cc_of(&[vec![0, 1, 2], vec![2, 0, 1]]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(single.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let half = cc_of(&[vec![0, 0, 1], vec![0, 1, 1]]);
        assert_eq!(half.get(0, 1), 0.5);
        assert_eq!(half.get(1, 0), 0.5);
    }

    #[test]
    fn binder_examples() {
        let truth = Partition::from_labels(&[0, 0, 1, 1, 1]);
        let cc = CoClusteringMatrix::from_partition(0, &truth);
        let cands = vec![Partition::one_block(5), truth.clone(), Partition::singletons(5)];
        let (best, loss) = binder_partition(&cc, &cands).unwrap();
        assert_eq!(best, truth);
        assert_eq!(loss, 0.0);

        let ident = CoClusteringMatrix::from_partition(0, &Partition::singletons(4));
        let (best, _) = binder_partition(&ident, &[Partition::one_block(4), Partition::singletons(4)]).unwrap();
        assert_eq!(best, Partition::singletons(4));
    }

    #[test]
    fn binder_ties_prefer_fewer_clusters_then_first() {
        // Every pair at 0.5: each partition's loss is C(n, 2)/2.
        let cc = cc_of(&[vec![0, 0, 0], vec![0, 1, 2]]);
        let cands = vec![Partition::singletons(3), Partition::one_block(3)];
        assert_eq!(binder_partition(&cc, &cands).unwrap().0, Partition::one_block(3));
        let a = Partition::from_labels(&[0, 0, 1]);
        let b = Partition::from_labels(&[0, 1, 1]);
        let tie = cc_of(&[vec![0, 0, 1], vec![0, 1, 1]]);
        assert_eq!(binder_partition(&tie, &[a.clone(), b.clone()]).unwrap().0, a);
        assert_eq!(binder_partition(&tie, &[b.clone(), a]).unwrap().0, b);
        assert!(binder_partition(&tie, &[]).is_err());
    }

    /// Independent brute force: all restricted growth strings of length n.
    fn brute_force_min(cc: &CoClusteringMatrix) -> f64 {
        let n = cc.n;
        let mut best = f64::INFINITY;
        let mut labels = vec![0usize; n];
        fn rec(i: usize, max: usize, labels: &mut Vec<usize>, cc: &CoClusteringMatrix, best: &mut f64) {
            let n = labels.len();
            if i == n {
                let mut loss = 0.0;
                for a in 0..n {
                    for b in a + 1..n {
                        let same = (labels[a] == labels[b]) as u8 as f64;
                        loss += (same - cc.get(a, b)).abs();
                    }
                }
                *best = best.min(loss);
                return;
            }
            for l in 0..=max + 1 {
                labels[i] = l;
                rec(i + 1, max.max(l), labels, cc, best);
            }
        }
        labels[0] = 0;
        rec(1, 0, &mut labels, cc, &mut best);
        best
    }

    #[test]
    fn exhaustive_binder_matches_brute_force_on_noisy_two_block_matrix() {
        let truth = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        let mut r = rng(1);
        let mut cc = CoClusteringMatrix::from_partition(0, &truth);
        for i in 0..6 {
            for j in i + 1..6 {
                let noise: f64 = r.gen_range(-0.1..0.1);
                let v = (cc.get(i, j) + noise).clamp(0.0, 1.0);
                cc.probs[i * 6 + j] = v;
                cc.probs[j * 6 + i] = v;
            }
        }
        assert_eq!(enumerate_partitions(6).len(), 203);
        let (best, loss) = binder_exhaustive(&cc).unwrap();
        assert!((loss - brute_force_min(&cc)).abs() < 1e-12);
        assert_eq!(best, truth);
    }

    #[test]
    fn labelling_rule() {
        assert_eq!(label_from_moments(-0.107, 0.022), ClusterLabel::Man);
        assert_eq!(label_from_moments(0.082, 0.008), ClusterLabel::Woman);
        assert_eq!(label_from_moments(0.0, 0.0), ClusterLabel::Neutral);
        assert_eq!(label_from_moments(0.0, 3.0), ClusterLabel::Neutral);
        assert_eq!(label_from_moments(-0.05, 0.1), ClusterLabel::Neutral);
        assert_eq!(label_from_moments(-0.05, 0.0), ClusterLabel::Man);
    }

    #[test]
    fn label_clusters_uses_block_moments() {
        let data = Dataset::new(1, 5, vec![-0.12, -0.10, 0.08, 0.09, 0.3]).unwrap();
        let p = Partition::from_labels(&[0, 0, 1, 1, 2]);
        let out = label_clusters(&data, &p, 0).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].label, ClusterLabel::Man);
        assert_eq!(out[1].label, ClusterLabel::Woman);
        assert_eq!(out[2].sd, 0.0);
        assert_eq!(out[2].label, ClusterLabel::Woman);
        assert!((out[0].sd - (0.0002f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mixture_density_examples() {
        let grid = linspace(-5.0, 5.0, 101);
        let mut f = vec![0.0; grid.len()];
        add_mixture_density(&[1.0], &[0.0], &[1.0], 1.0, 0.0, &grid, &mut f);
        for (y, v) in grid.iter().zip(&f) {
            let exact = (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!((v - exact).abs() < 1e-12);
        }
        let mut g = vec![0.0; grid.len()];
        add_mixture_density(&[0.5, 0.5], &[-1.0, 1.0], &[1.0, 1.0], 1.0, 0.0, &grid, &mut g);
        let mut swapped = vec![0.0; grid.len()];
        add_mixture_density(&[0.5, 0.5], &[1.0, -1.0], &[1.0, 1.0], 1.0, 0.0, &grid, &mut swapped);
        for (i, y) in grid.iter().enumerate() {
            let exact = 0.5 * ((-0.5 * (y + 1.0).powi(2)).exp() + (-0.5 * (y - 1.0).powi(2)).exp())
                / (2.0 * std::f64::consts::PI).sqrt();
            assert!((g[i] - exact).abs() < 1e-12);
            assert!((g[i] - swapped[i]).abs() < 1e-15);
        }
    }

    fn gauss(grid: &[f64], m: f64, s: f64) -> Vec<f64> {
        grid.iter()
            .map(|y| (-0.5 * ((y - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt()))
            .collect()
    }

    #[test]
    fn hellinger_examples() {
        let grid = linspace(-12.0, 13.0, 5001);
        let f = gauss(&grid, 0.0, 1.0);
        let g = gauss(&grid, 1.0, 1.0);
        assert_eq!(hellinger_distance(&f, &f, &grid).unwrap(), 0.0);
        let exact = (1.0 - (-0.125f64).exp()).sqrt();
        assert!((exact - 0.3428).abs() < 1e-4);
        assert!((hellinger_distance(&f, &g, &grid).unwrap() - exact).abs() < 1e-3);
        // Disjoint uniform densities.
        let u1: Vec<f64> = grid.iter().map(|&y| if (0.0..1.0).contains(&y) { 1.0 } else { 0.0 }).collect();
        let u2: Vec<f64> = grid.iter().map(|&y| if (2.0..3.0).contains(&y) { 1.0 } else { 0.0 }).collect();
        assert!((hellinger_distance(&u1, &u2, &grid).unwrap() - 1.0).abs() < 1e-3);
        assert!(hellinger_distance(&f, &g[1..], &grid[1..]).is_err());
    }

    #[test]
    fn hellinger_is_a_metric_on_random_mixtures() {
        let grid = linspace(-20.0, 20.0, 2001);
        let mut r = rng(7);
        let mix = |r: &mut ChaCha8Rng| {
            let mut f = vec![0.0; grid.len()];
            let w: f64 = r.gen();
            let mu: Vec<f64> = (0..2).map(|_| r.gen_range(-5.0..5.0)).collect();
            let tau: Vec<f64> = (0..2).map(|_| r.gen_range(0.3..3.0)).collect();
            add_mixture_density(&[w, 1.0 - w], &mu, &tau, 1.0, 0.0, &grid, &mut f);
            f
        };
        for _ in 0..100 {
            let (a, b, c) = (mix(&mut r), mix(&mut r), mix(&mut r));
            let ab = hellinger_distance(&a, &b, &grid).unwrap();
            let ba = hellinger_distance(&b, &a, &grid).unwrap();
            let bc = hellinger_distance(&b, &c, &grid).unwrap();
            let ac = hellinger_distance(&a, &c, &grid).unwrap();
            assert_eq!(ab, ba);
            assert!(ac <= ab + bc + 1e-6);
            assert!((0.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn prior_study_limits() {
        let mut r = rng(9);
        let frozen = prior_hellinger_study(&HellingerStudy::new(0.999_999_9, 3, 20), &mut r).unwrap();
        assert!(frozen.iter().flatten().all(|&d| d < 0.02), "{frozen:?}");
        let mixed = prior_hellinger_study(&HellingerStudy::new(-0.3, 4, 20), &mut r).unwrap();
        assert!(mixed.iter().flatten().all(|&d| (0.0..=1.0).contains(&d)));
        assert_eq!(mixed[0].len(), 3);
    }

    #[test]
    fn ari_values() {
        let a = Partition::from_labels(&[0, 0, 1, 1]);
        let relabelled = Partition::from_labels(&[5, 5, 2, 2]);
        assert_eq!(adjusted_rand_index(&a, &relabelled).unwrap(), 1.0);
        // Contingency table of ones: index 0, expected 2·2/6, max 2, so ARI = −0.5.
        let b = Partition::from_labels(&[0, 1, 0, 1]);
        assert!((adjusted_rand_index(&a, &b).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(
            adjusted_rand_index(&Partition::one_block(5), &Partition::one_block(5)).unwrap(),
            1.0
        );
    }

    #[test]
    fn scalar_summary_of_constant_sample() {
        let s = summarize_scalar(&[0.5; 40]).unwrap();
        assert_eq!((s.mean, s.median, s.lower_95, s.upper_95), (0.5, 0.5, 0.5, 0.5));
        assert_eq!(s.prob_positive, 1.0);
        let u = summarize_scalar(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(u.median, 2.5);
        assert!(summarize_scalar(&[]).is_err());
    }

    #[test]
    fn default_grid_spans_data_with_padding() {
        let g = default_grid(&[0.0, 2.0]).unwrap();
        let sd = 2f64.sqrt();
        assert_eq!(g.len(), DEFAULT_GRID_POINTS);
        assert!((g[0] + 3.0 * sd).abs() < 1e-12 && (g[511] - 2.0 - 3.0 * sd).abs() < 1e-12);
    }
}
