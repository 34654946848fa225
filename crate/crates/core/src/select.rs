//! Query selection shared by all engines.

use std::cmp::Ordering;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::params::LabelState;

/// Below this magnitude the unlabeled mean of the raw impact counts as zero
/// and [`scale_impact`] passes the input through.
pub const ZERO_MEAN_EPS: f64 = 1e-15;

/// Rescales the raw impact factor so its mean over the unlabeled points
/// equals the mean of `f` there.
pub fn scale_impact(raw: &DVector<f64>, f: &DVector<f64>, labels: &LabelState) -> DVector<f64> {
    let (mut sum_im, mut sum_f, mut count) = (0.0, 0.0, 0usize);
    for i in labels.unlabeled() {
        sum_im += raw[i];
        sum_f += f[i];
        count += 1;
    }
    if count == 0 {
        return raw.clone();
    }
    let mean_im = sum_im / count as f64;
    if mean_im.abs() <= ZERO_MEAN_EPS {
        return raw.clone();
    }
    raw * ((sum_f / count as f64) / mean_im)
}

/// `f + alpha * im`, or `f` when the impact term is absent or `alpha == 0`.
pub fn criterion(f: &DVector<f64>, im: Option<&DVector<f64>>, alpha: f64) -> DVector<f64> {
    match im {
        Some(im) if alpha != 0.0 => f + im * alpha,
        _ => f.clone(),
    }
}

/// Index of the largest score over the unlabeled points; ties go to the
/// lowest index.
pub fn argmax_unlabeled(scores: &DVector<f64>, labels: &LabelState) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in labels.unlabeled() {
        let s = scores[i];
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i).ok_or(Error::Exhausted)
}

/// The `k` best unlabeled indices, by score descending then index ascending.
pub fn top_k_unlabeled(scores: &DVector<f64>, labels: &LabelState, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = labels.unlabeled().collect();
    let cmp = |a: &usize, b: &usize| {
        scores[*b]
            .partial_cmp(&scores[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}
