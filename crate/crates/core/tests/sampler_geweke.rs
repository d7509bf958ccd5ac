//! Geweke joint-distribution tests of the complete sweep (atoms, allocations,
//! label swaps, ψ, ε, M) on a tiny panel.

use ar1dp::diagnostics::{batch_means_se, mean, variance};
use ar1dp::inference::{McmcConfig, PriorSpec, Sampler, SmcBlocking};
use ar1dp::measure::{sample_from_weights, weights_from_eps};
use ar1dp::mixture::{AllocationState, BaseMeasure, ComponentParams, Dataset};
use ar1dp::prior::{sample_ar1_path, Ar1Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

const HORIZON: usize = 2;
const UNITS: usize = 3;
const TRUNCATION: usize = 3;
const STATS: usize = 8;

fn prior() -> PriorSpec {
    PriorSpec {
        base: BaseMeasure {
            mu0: 0.0,
            lambda0: 1.0,
            alpha: 3.0,
            beta: 2.0,
            kernel_scale: 1.0,
        },
        truncation: TRUNCATION,
        ..PriorSpec::default()
    }
}

fn simulate_y(base: &BaseMeasure, comps: &ComponentParams, alloc: &AllocationState, rng: &mut ChaCha8Rng) -> Dataset {
    let mut y = Vec::with_capacity(HORIZON * UNITS);
    for t in 0..HORIZON {
        for u in 0..UNITS {
            let h = alloc.get(t, u);
            let sd = 1.0 / (base.kernel_scale * comps.tau[h]).sqrt();
            y.push(Normal::new(comps.mu[h], sd).unwrap().sample(rng));
        }
    }
    Dataset::new(HORIZON, UNITS, y).unwrap()
}

/// Label-dependent and label-free summaries of one joint state.
fn stats(psi: f64, mass: f64, eps: &[f64], comps: &ComponentParams, alloc: &AllocationState) -> [f64; STATS] {
    let sticks = TRUNCATION - 1;
    [
        psi,
        mass,
        eps[0],
        eps[0] * eps[sticks],
        comps.mu[alloc.get(0, 0)],
        comps.tau[0],
        (alloc.get(0, 0) == 0) as u8 as f64,
        (alloc.get(1, 0) == alloc.get(1, 1)) as u8 as f64,
    ]
}

fn max_z(config: McmcConfig, draws: usize, seed: u64) -> (f64, Vec<f64>) {
    let prior = prior();
    let base = prior.base;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mass_law = Gamma::new(prior.mass_prior.shape, 1.0 / prior.mass_prior.rate).unwrap();

    let mut mc = (0..STATS).map(|_| Vec::with_capacity(draws)).collect::<Vec<Vec<f64>>>();
    for _ in 0..draws {
        let psi: f64 = rng.gen_range(-1.0..1.0);
        let mass = mass_law.sample(&mut rng);
        let eps = sample_ar1_path(Ar1Params::new(psi).unwrap(), HORIZON, TRUNCATION - 1, &mut rng).unwrap();
        let weights = weights_from_eps(&eps, mass);
        let comps = ComponentParams::from_prior(&base, TRUNCATION, &mut rng);
        let s: Vec<u32> = (0..HORIZON)
            .flat_map(|t| sample_from_weights(weights.row(t), UNITS, &mut rng))
            .map(|h| h as u32)
            .collect();
        let alloc = AllocationState::new(HORIZON, UNITS, s, TRUNCATION).unwrap();
        for (k, v) in stats(psi, mass, eps.values(), &comps, &alloc).into_iter().enumerate() {
            mc[k].push(v);
        }
    }

    let init = Dataset::new(HORIZON, UNITS, vec![0.0; HORIZON * UNITS]).unwrap();
    let mut sampler = Sampler::new(&init, &prior, &config).unwrap();
    let mut data = {
        let st = sampler.state();
        simulate_y(&base, &st.comps, &st.alloc, &mut rng)
    };
    let mut sc = (0..STATS).map(|_| Vec::with_capacity(draws)).collect::<Vec<Vec<f64>>>();
    for _ in 0..draws {
        sampler.sweep(&data).unwrap();
        let st = sampler.state();
        for (k, v) in stats(st.psi, st.mass, st.eps.values(), &st.comps, &st.alloc).into_iter().enumerate() {
            sc[k].push(v);
        }
        data = simulate_y(&base, &st.comps, &st.alloc, &mut rng);
    }

    let z: Vec<f64> = (0..STATS)
        .map(|k| {
            let se_mc = (variance(&mc[k]) / draws as f64).sqrt();
            let se_sc = batch_means_se(&sc[k], 100);
            (mean(&mc[k]) - mean(&sc[k])).abs() / (se_mc * se_mc + se_sc * se_sc).sqrt()
        })
        .collect();
    (z.iter().cloned().fold(0.0, f64::max), z)
}

fn config(blocking: SmcBlocking, label_swaps: usize, seed: u64) -> McmcConfig {
    let mut c = McmcConfig::applications().with_seed(seed);
    c.num_particles = 10;
    c.adapt_psi_proposal = false;
    c.psi_proposal_sd = 0.5;
    c.smc_blocking = blocking;
    c.label_swaps = label_swaps;
    c
}

#[test]
fn per_stick_sweep_with_label_swaps_preserves_the_joint_law() {
    let (worst, z) = max_z(config(SmcBlocking::PerStick, 5, 31), 60_000, 131);
    assert!(worst <= 3.5, "z scores {z:?}");
}

#[test]
fn joint_sweep_with_label_swaps_preserves_the_joint_law() {
    let (worst, z) = max_z(config(SmcBlocking::Joint, 5, 32), 60_000, 132);
    assert!(worst <= 3.5, "z scores {z:?}");
}
