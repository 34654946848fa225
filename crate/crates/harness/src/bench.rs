//! Per-iteration timing of the linearized engine as `n` grows.

use std::time::Instant;

use actsearch_core::asg::{AsgEngine, DEFAULT_CAP};
use actsearch_core::las::LasState;
use actsearch_core::{synthetic, ActiveSearch, Error as CoreError, HyperParams};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::experiment::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub r: usize,
    pub init_seconds: f64,
    /// Median of query plus update time over iterations `10..iters`.
    pub median_iter_seconds: f64,
    pub iters: usize,
    /// Whether the dense engine refused this size. It is only attempted
    /// above its cap, where it must refuse before allocating.
    pub asg_refused: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of median iteration time against `n`.
    pub seconds_per_point: f64,
}

impl BenchTable {
    /// Ratio of median iteration times between the rows for `big` and
    /// `small`.
    pub fn ratio(&self, small: usize, big: usize) -> Option<f64> {
        let t = |n| self.rows.iter().find(|r| r.n == n).map(|r| r.median_iter_seconds);
        Some(t(big)? / t(small)?)
    }
}

/// Times one size. Features are uniform on `[0, 1)`, roughly 1% of points
/// are positive, and the run starts from one positive.
pub fn bench_size(r: usize, n: usize, iters: usize, seed: u64, h: &HyperParams) -> Result<BenchRow> {
    let d = synthetic::uniform_labeled(r, n, 0.01, seed);
    let labels = d.labels().expect("generated with labels").to_vec();
    let first = labels.iter().position(|&y| y == 1).unwrap_or(0);
    let init = [(first, labels[first])];
    let asg_refused = n > DEFAULT_CAP
        && matches!(AsgEngine::new(&d, &init, *h), Err(CoreError::TooLarge { .. }));
    let start = Instant::now();
    let mut st = LasState::init(&d, &init, *h)?;
    let init_seconds = start.elapsed().as_secs_f64();
    let steps = iters.min(n - 1);
    let mut times = Vec::with_capacity(steps);
    for _ in 0..steps {
        let t = Instant::now();
        let i = st.next_query()?;
        st.update(i, labels[i])?;
        times.push(t.elapsed().as_secs_f64());
    }
    let tail = if times.len() > 10 { &times[10..] } else { &times[..] };
    Ok(BenchRow {
        n,
        r,
        init_seconds,
        median_iter_seconds: median(tail),
        iters: steps,
        asg_refused,
    })
}

pub fn scaling_bench(r: usize, n_list: &[usize], iters: usize, seed: u64, h: &HyperParams) -> Result<BenchTable> {
    if n_list.is_empty() {
        return Err(config("no sizes to benchmark"));
    }
    if r == 0 || n_list.contains(&0) || n_list.contains(&1) {
        return Err(config("sizes and dimension must be at least 2 and 1"));
    }
    let rows = n_list
        .iter()
        .map(|&n| bench_size(r, n, iters, seed, h))
        .collect::<Result<Vec<_>>>()?;
    let k = rows.len() as f64;
    let mx = rows.iter().map(|r| r.n as f64).sum::<f64>() / k;
    let my = rows.iter().map(|r| r.median_iter_seconds).sum::<f64>() / k;
    let sxx: f64 = rows.iter().map(|r| (r.n as f64 - mx).powi(2)).sum();
    let sxy: f64 = rows
        .iter()
        .map(|r| (r.n as f64 - mx) * (r.median_iter_seconds - my))
        .sum();
    let seconds_per_point = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(BenchTable {
        rows,
        seconds_per_point,
    })
}
