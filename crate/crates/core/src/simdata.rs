//! Seeded generators for the seven two-cluster simulation scenarios, with
//! the ground-truth partitions attached.
//!
//! 1. One N(0, 1) cluster at every time.
//! 2. Fixed halves from N(−80, 1) and N(−40, 4) at every time.
//! 3. Fixed halves whose means move (−80, 80), (−60, 20), (−40, 40), (−20, 60).
//! 4. As 3, but every unit switches cluster with probability 0.5 at each t ≥ 2.
//! 5. As 4 with switch probability 0.2.
//! 6. T = 2: all N(−80, 1), then halves from N(−40, 1) and N(40, 1).
//! 7. T = 2: halves from N(−40, 1) and N(40, 1), then all N(−80, 1).

use crate::error::{Error, Result};
use crate::measure::Partition;
use crate::mixture::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const DEFAULT_UNITS: usize = 100;

const MOVING_MEANS: [[f64; 2]; 4] = [[-80.0, 80.0], [-60.0, 20.0], [-40.0, 40.0], [-20.0, 60.0]];

/// Optional changes to the default panel size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioOverrides {
    pub units: Option<usize>,
    pub horizon: Option<usize>,
}

/// Simulated panel plus the generating cluster of every observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub id: u8,
    pub dataset: Dataset,
    /// Generating cluster c_tj (0 or 1), one row per time.
    pub true_clusters: Vec<Vec<usize>>,
    pub true_partitions: Vec<Partition>,
}

/// Default horizon: 4 for scenarios 1–5, 2 for 6–7.
pub fn default_horizon(id: u8) -> Result<usize> {
    match id {
        1..=5 => Ok(4),
        6 | 7 => Ok(2),
        _ => Err(unknown(id)),
    }
}

fn unknown(id: u8) -> Error {
    Error::Config(format!("unknown scenario {id}; valid scenarios are 1-7"))
}

/// Per-unit switch probability at each t ≥ 2, for the switching scenarios.
pub fn switch_probability(id: u8) -> Option<f64> {
    match id {
        4 => Some(0.5),
        5 => Some(0.2),
        _ => None,
    }
}

/// (mean, sd) of cluster `c` at time `t` (0-based).
fn component(id: u8, t: usize, c: usize) -> (f64, f64) {
    match id {
        1 => (0.0, 1.0),
        2 => [(-80.0, 1.0), (-40.0, 2.0)][c],
        3..=5 => (MOVING_MEANS[t][c], 1.0),
        6 => [[(-80.0, 1.0), (-80.0, 1.0)], [(-40.0, 1.0), (40.0, 1.0)]][t][c],
        7 => [[(-40.0, 1.0), (40.0, 1.0)], [(-80.0, 1.0), (-80.0, 1.0)]][t][c],
        _ => unreachable!("scenario id checked by caller"),
    }
}

/// Whether the two generating clusters coincide at time `t`.
fn single_cluster(id: u8, t: usize) -> bool {
    matches!((id, t), (1, _) | (6, 0) | (7, 1))
}

/// Simulates scenario `id` (1–7) from `seed`.
pub fn generate_scenario(id: u8, seed: u64, overrides: ScenarioOverrides) -> Result<ScenarioOutput> {
    let default_t = default_horizon(id)?;
    let horizon = overrides.horizon.unwrap_or(default_t);
    let units = overrides.units.unwrap_or(DEFAULT_UNITS);
    if units < 2 {
        return Err(Error::Config(format!("scenarios need at least 2 units, got {units}")));
    }
    let max_t = match id {
        3..=5 => MOVING_MEANS.len(),
        6 | 7 => 2,
        _ => usize::MAX,
    };
    if horizon == 0 || horizon > max_t {
        return Err(Error::Config(format!(
            "scenario {id} supports horizons 1..={max_t}, got {horizon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let switch = switch_probability(id);
    let mut clusters: Vec<usize> = (0..units).map(|j| usize::from(j >= units / 2)).collect();
    let mut y = Vec::with_capacity(units * horizon);
    let mut true_clusters = Vec::with_capacity(horizon);
    let mut true_partitions = Vec::with_capacity(horizon);
    for t in 0..horizon {
        if t > 0 {
            if let Some(p) = switch {
                for c in clusters.iter_mut() {
                    if rng.gen::<f64>() < p {
                        *c = 1 - *c;
                    }
                }
            }
        }
        let row: Vec<usize> = if single_cluster(id, t) {
            vec![0; units]
        } else {
            clusters.clone()
        };
        for &c in &row {
            let (m, s) = component(id, t, c);
            let dist = Normal::new(m, s).expect("valid scenario parameters");
            y.push(dist.sample(&mut rng));
        }
        true_partitions.push(Partition::from_labels(&row));
        true_clusters.push(row);
    }
    Ok(ScenarioOutput {
        id,
        dataset: Dataset::new(horizon, units, y)?,
        true_clusters,
        true_partitions,
    })
}
