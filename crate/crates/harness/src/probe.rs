//! Pairwise probe: start from one positive and one negative and count the
//! positives among the top-ranked unlabeled points.

use actsearch_core::las::LasState;
use actsearch_core::select::top_k_unlabeled;
use actsearch_core::wnas::WnasState;
use actsearch_core::{ActiveSearch, Dataset, HyperParams};
use log::warn;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub pairs: usize,
    pub top: usize,
    pub seed: u64,
    /// Candidate pairs drawn at most, as a multiple of `pairs`.
    pub max_draw_factor: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            pairs: 100,
            top: 100,
            seed: 0,
            max_draw_factor: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub positive: usize,
    pub negative: usize,
    pub las: usize,
    pub wnas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub top: usize,
    pub valid: Vec<PairResult>,
    /// Pairs where neither engine found a positive.
    pub excluded: usize,
    pub las_mean: f64,
    pub wnas_mean: f64,
}

fn positives_in_top(e: &dyn ActiveSearch, labels: &[u8], top: usize) -> usize {
    top_k_unlabeled(e.f(), e.labels(), top)
        .into_iter()
        .filter(|&i| labels[i] == 1)
        .count()
}

fn score_pair(d: &Dataset, labels: &[u8], h: HyperParams, top: usize, p: usize, q: usize) -> Result<PairResult> {
    let init = [(p, 1), (q, 0)];
    let las = LasState::init(d, &init, h)?;
    let wnas = WnasState::init(d, &init, h)?;
    Ok(PairResult {
        positive: p,
        negative: q,
        las: positives_in_top(&las, labels, top),
        wnas: positives_in_top(&wnas, labels, top),
    })
}

/// Compares the linearized and weighted-neighbor engines on random
/// positive/negative pairs. Ranking uses `f` alone.
pub fn run_pairwise_probe(d: &Dataset, h: HyperParams, opts: &ProbeOptions) -> Result<ProbeReport> {
    h.validate()?;
    let labels = d
        .labels()
        .ok_or_else(|| config("the probe needs ground-truth labels"))?;
    let pos: Vec<usize> = (0..d.n()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..d.n()).filter(|&i| labels[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(config("the probe needs both positives and negatives"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let max_draws = opts.pairs * opts.max_draw_factor.max(1);
    let mut valid = Vec::with_capacity(opts.pairs);
    let mut excluded = 0;
    let mut drawn = 0;
    while valid.len() < opts.pairs && drawn < max_draws {
        // evaluate in batches so the pair sequence does not depend on threads
        let batch = (opts.pairs - valid.len()).min(max_draws - drawn);
        let pairs: Vec<(usize, usize)> = (0..batch)
            .map(|_| (*pos.choose(&mut rng).unwrap(), *neg.choose(&mut rng).unwrap()))
            .collect();
        drawn += batch;
        let results: Vec<PairResult> = pairs
            .par_iter()
            .map(|&(p, q)| score_pair(d, labels, h, opts.top, p, q))
            .collect::<Result<_>>()?;
        for r in results {
            if r.las == 0 && r.wnas == 0 {
                excluded += 1;
            } else if valid.len() < opts.pairs {
                valid.push(r);
            }
        }
    }
    if valid.len() < opts.pairs {
        warn!("only {} valid pairs out of {} requested", valid.len(), opts.pairs);
    }
    let mean = |f: fn(&PairResult) -> usize| {
        if valid.is_empty() {
            f64::NAN
        } else {
            valid.iter().map(|r| f(r) as f64).sum::<f64>() / valid.len() as f64
        }
    };
    Ok(ProbeReport {
        top: opts.top,
        las_mean: mean(|r| r.las),
        wnas_mean: mean(|r| r.wnas),
        valid,
        excluded,
    })
}
