//! Simulated-oracle recall experiments.

use std::time::Instant;

use actsearch_core::{build_engine, Dataset, EngineKind, HyperParams};
use log::warn;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{InitPolicy, RunConfig};
use crate::error::{config, Result};

/// One run of the query loop against the ground-truth labels.
///
/// Index `t - 1` of each vector describes the state after `t` queries.
/// Positives in the initial set are not counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCurve {
    pub engine: EngineKind,
    pub seed: u64,
    pub initial: Vec<(usize, u8)>,
    pub queries: Vec<usize>,
    pub found: Vec<usize>,
    pub ideal: Vec<usize>,
    pub random_expect: Vec<f64>,
    /// Wall time of each query plus update.
    pub seconds: Vec<f64>,
}

impl RecallCurve {
    pub fn len(&self) -> usize {
        self.found.len()
    }

    pub fn is_empty(&self) -> bool {
        self.found.is_empty()
    }

    /// Positives found after `t` queries; `t = 0` gives 0.
    pub fn recall_at(&self, t: usize) -> usize {
        if t == 0 {
            0
        } else {
            self.found[t.min(self.found.len()) - 1]
        }
    }

    /// Median per-iteration time over iterations `10..`, or over all when
    /// the run is shorter.
    pub fn median_seconds(&self) -> f64 {
        let tail = if self.seconds.len() > 10 {
            &self.seconds[10..]
        } else {
            &self.seconds[..]
        };
        median(tail)
    }
}

pub(crate) fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Draws the initial labeled set for one seed.
pub fn draw_initial(labels: &[u8], policy: InitPolicy, seed: u64) -> Result<Vec<(usize, u8)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let p = *pos
        .choose(&mut rng)
        .ok_or_else(|| config("dataset has no positives"))?;
    match policy {
        InitPolicy::OneRandomPositive => Ok(vec![(p, 1)]),
        InitPolicy::PosNegPair => {
            let q = *neg
                .choose(&mut rng)
                .ok_or_else(|| config("dataset has no negatives"))?;
            Ok(vec![(p, 1), (q, 0)])
        }
    }
}

/// Runs the query loop for one seed.
pub fn run_seed(
    d: &Dataset,
    kind: EngineKind,
    h: HyperParams,
    budget: usize,
    policy: InitPolicy,
    seed: u64,
) -> Result<RecallCurve> {
    let labels = d
        .labels()
        .ok_or_else(|| config("experiments need ground-truth labels"))?;
    let initial = draw_initial(labels, policy, seed)?;
    let mut engine = build_engine(kind, d, &initial, h)?;
    let available = d.n() - initial.len();
    let steps = if budget > available {
        warn!("budget {budget} exceeds the {available} unlabeled points; truncating");
        available
    } else {
        budget
    };
    let total_pos = labels.iter().filter(|&&y| y == 1).count();
    let prevalence = total_pos as f64 / d.n() as f64;
    let mut curve = RecallCurve {
        engine: kind,
        seed,
        initial,
        queries: Vec::with_capacity(steps),
        found: Vec::with_capacity(steps),
        ideal: (1..=steps).map(|t| t.min(total_pos)).collect(),
        random_expect: (1..=steps).map(|t| t as f64 * prevalence).collect(),
        seconds: Vec::with_capacity(steps),
    };
    let mut found = 0;
    for _ in 0..steps {
        let start = Instant::now();
        let i = engine.next_query()?;
        engine.update(i, labels[i])?;
        curve.seconds.push(start.elapsed().as_secs_f64());
        found += usize::from(labels[i]);
        curve.queries.push(i);
        curve.found.push(found);
    }
    Ok(curve)
}

/// Runs every seed of `cfg` on an already loaded dataset. Seeds run in
/// parallel; the result is in seed order.
pub fn run_on(d: &Dataset, cfg: &RunConfig) -> Result<Vec<RecallCurve>> {
    cfg.validate()?;
    cfg.seeds
        .par_iter()
        .map(|&s| run_seed(d, cfg.engine, cfg.h, cfg.budget, cfg.init_policy, s))
        .collect()
}

pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<RecallCurve>> {
    cfg.validate()?;
    let d = cfg.load_dataset()?;
    run_on(&d, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub iteration: usize,
    pub mean: f64,
    /// Sample standard deviation across seeds; 0 for a single seed.
    pub std: f64,
    pub ideal: usize,
    pub random_expect: f64,
}

/// Mean recall with its spread at the middle and the last iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub engine: EngineKind,
    pub runs: usize,
    pub budget: usize,
    pub mid: Stat,
    pub last: Stat,
}

impl Summary {
    pub fn from_curves(curves: &[RecallCurve]) -> Result<Self> {
        let first = curves.first().ok_or_else(|| config("no curves to summarize"))?;
        if curves.iter().any(|c| c.engine != first.engine || c.len() != first.len()) {
            return Err(config("curves differ in engine or length"));
        }
        let budget = first.len();
        if budget == 0 {
            return Err(config("curves are empty"));
        }
        let stat = |t: usize| {
            let vals: Vec<f64> = curves.iter().map(|c| c.recall_at(t) as f64).collect();
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            Stat {
                iteration: t,
                mean,
                std,
                ideal: first.ideal[t - 1],
                random_expect: first.random_expect[t - 1],
            }
        };
        Ok(Summary {
            engine: first.engine,
            runs: curves.len(),
            budget,
            mid: stat((budget / 2).max(1)),
            last: stat(budget),
        })
    }
}
