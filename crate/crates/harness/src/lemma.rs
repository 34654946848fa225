//! Checks that a nearly block-diagonal similarity gives a nearly
//! block-diagonal `M^-1`: `|M^-1_12|_1 < (1 / (c d_min))^2 |A_2|_1` with
//! `c = min(1 / lambda, w0)`.

use actsearch_core::asg::{self, DEFAULT_CAP};
use actsearch_core::{synthetic, Dataset, Error as CoreError, HyperParams, LabelState};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Entries of `M^-1` above this count as nonnegative.
pub const STIELTJES_TOL: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// `|A_2|_1` of the cross-block similarities.
    pub a2_norm1: f64,
    /// `|M^-1_12|_1` of the off-diagonal block of the inverse.
    pub m12_norm1: f64,
    pub bound: f64,
    pub c: f64,
    pub d_min: f64,
    pub holds: bool,
    pub min_inverse_entry: f64,
    pub stieltjes: bool,
}

/// Max absolute column sum of the `rows x cols` submatrix.
fn norm1_block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    cols.iter()
        .map(|&j| rows.iter().map(|&i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `split[i]` names the block of point `i`; `labels` fixes which pseudo-node
/// weights apply.
pub fn lemma_check(d: &Dataset, split: &[bool], labels: &LabelState, h: &HyperParams) -> Result<LemmaReport> {
    h.validate()?;
    if split.len() != d.n() || labels.n() != d.n() {
        return Err(config("split and labels must cover every point"));
    }
    let g = asg::build_graph_capped(d, DEFAULT_CAP)?;
    let a = g.a();
    if let Some(k) = a.iter().position(|&v| v < 0.0) {
        return Err(CoreError::Precondition(format!(
            "negative similarity between points {} and {}",
            k % d.n(),
            k / d.n()
        ))
        .into());
    }
    if let Some(index) = g.degrees().iter().position(|&v| v == 0.0) {
        return Err(CoreError::ZeroDegree { index }.into());
    }
    let b0: Vec<usize> = (0..d.n()).filter(|&i| !split[i]).collect();
    let b1: Vec<usize> = (0..d.n()).filter(|&i| split[i]).collect();
    let cross = DMatrix::from_fn(d.n(), d.n(), |i, j| if split[i] != split[j] { a[(i, j)] } else { 0.0 });
    let a2_norm1 = norm1_block(&cross, &(0..d.n()).collect::<Vec<_>>(), &(0..d.n()).collect::<Vec<_>>());
    let inv = asg::m_matrix(&g, labels, h)
        .try_inverse()
        .ok_or_else(|| CoreError::Numerical("M is singular".into()))?;
    let m12_norm1 = norm1_block(&inv, &b0, &b1);
    let c = (1.0 / h.lambda).min(h.w0);
    let d_min = g.degrees().min();
    let bound = (1.0 / (c * d_min)).powi(2) * a2_norm1;
    // the strict inequality cannot hold when both sides vanish
    let holds = m12_norm1 < bound || (a2_norm1 == 0.0 && m12_norm1 == 0.0);
    let min_inverse_entry = inv.min();
    Ok(LemmaReport {
        a2_norm1,
        m12_norm1,
        bound,
        c,
        d_min,
        holds,
        min_inverse_entry,
        stieltjes: min_inverse_entry >= STIELTJES_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub trials: usize,
    pub n: usize,
    /// Coordinates per block.
    pub k: usize,
    pub eps: f64,
    /// Points labeled per trial, drawn uniformly.
    pub labeled: usize,
    pub seed: u64,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            trials: 100,
            n: 60,
            k: 5,
            eps: 1e-3,
            labeled: 6,
            seed: 0,
        }
    }
}

/// Runs [`lemma_check`] on independent two-block instances. Block 1 is the
/// positive class.
pub fn lemma_trials(opts: &TrialOptions, h: &HyperParams) -> Result<Vec<LemmaReport>> {
    if opts.labeled > opts.n {
        return Err(config("more labeled points than points"));
    }
    (0..opts.trials)
        .map(|t| {
            let seed = opts.seed.wrapping_add(t as u64);
            let (d, split) = synthetic::two_block(opts.n, opts.k, opts.eps, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
            let init: Vec<(usize, u8)> = sample(&mut rng, opts.n, opts.labeled)
                .into_iter()
                .map(|i| (i, u8::from(split[i])))
                .collect();
            let labels = LabelState::with_labels(opts.n, h.pi, &init)?;
            lemma_check(&d, &split, &labels, h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_diagonal_similarity_holds_trivially() {
        let (d, split) = synthetic::two_block(20, 3, 0.0, 1);
        let labels = LabelState::with_labels(20, 0.05, &[(0, 0), (15, 1)]).unwrap();
        let r = lemma_check(&d, &split, &labels, &HyperParams::default()).unwrap();
        assert_eq!(r.a2_norm1, 0.0);
        assert!(r.m12_norm1.abs() < 1e-18);
        assert!(r.holds && r.stieltjes);
    }

    #[test]
    fn noisy_blocks_hold() {
        let reports = lemma_trials(
            &TrialOptions {
                trials: 5,
                ..TrialOptions::default()
            },
            &HyperParams::default(),
        )
        .unwrap();
        assert!(reports.iter().all(|r| r.holds && r.stieltjes && r.a2_norm1 > 0.0));
    }

    #[test]
    fn negative_similarity_is_rejected() {
        let x = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 2.0]);
        let d = Dataset::from_matrix(x, None).unwrap();
        let labels = LabelState::new(3, 0.05);
        let err = lemma_check(&d, &[false, true, true], &labels, &HyperParams::default());
        assert!(matches!(err, Err(crate::Error::Core(CoreError::Precondition(_)))));
    }

    #[test]
    fn c_is_the_weaker_pseudo_weight() {
        let (d, split) = synthetic::two_block(10, 2, 1e-3, 2);
        let labels = LabelState::new(10, 0.1);
        let h = HyperParams::new(0.5, 0.3, 0.1, 0.0).unwrap();
        let r = lemma_check(&d, &split, &labels, &h).unwrap();
        assert_eq!(r.c, 0.3);
        let h = HyperParams::new(10.0, 0.3, 0.1, 0.0).unwrap();
        assert_eq!(lemma_check(&d, &split, &labels, &h).unwrap().c, 0.1);
    }
}
