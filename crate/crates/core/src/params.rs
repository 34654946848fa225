//! Hyperparameters of the soft-label model and the labeled/unlabeled partition.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Soft-label model parameters shared by every engine.
///
/// `lambda` weighs graph smoothness against fit to the observed labels, so
/// small values clamp labeled points; `w0` pulls unlabeled points toward the
/// prior `pi`.
/// `alpha` scales the impact-factor term of the selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub lambda: f64,
    pub w0: f64,
    pub pi: f64,
    pub alpha: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lambda: 1.5,
            w0: 0.05,
            pi: 0.05,
            alpha: 1e-6,
        }
    }
}

impl HyperParams {
    pub fn new(lambda: f64, w0: f64, pi: f64, alpha: f64) -> Result<Self> {
        let h = HyperParams {
            lambda,
            w0,
            pi,
            alpha,
        };
        h.validate()?;
        Ok(h)
    }

    /// Builds parameters from the pseudo-node transition probabilities:
    /// `eta` into labeled pseudo-nodes and `nu` into unlabeled ones.
    pub fn from_transitions(eta: f64, nu: f64, pi: f64, alpha: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(param("eta", format!("must lie in (0, 1), got {eta}")));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(param("nu", format!("must lie in (0, 1), got {nu}")));
        }
        Self::new((1.0 - eta) / eta, nu, pi, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(param("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if !(self.w0 > 0.0 && self.w0.is_finite()) {
            return Err(param("w0", format!("must be positive, got {}", self.w0)));
        }
        if !(0.0..=1.0).contains(&self.pi) {
            return Err(param("pi", format!("must lie in [0, 1], got {}", self.pi)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(param("alpha", format!("must be nonnegative, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Diagonal of `B` for a labeled point: `lambda / (1 + lambda)`.
    #[inline]
    pub fn beta_labeled(&self) -> f64 {
        self.lambda / (1.0 + self.lambda)
    }

    /// Diagonal of `B` for an unlabeled point: `1 / (1 + w0)`.
    #[inline]
    pub fn beta_unlabeled(&self) -> f64 {
        1.0 / (1.0 + self.w0)
    }

    /// Entry of `(I - B) y'` for a labeled point with label `y`.
    #[inline]
    pub fn q_labeled(&self, y: u8) -> f64 {
        f64::from(y) / (1.0 + self.lambda)
    }

    /// Entry of `(I - B) y'` for an unlabeled point.
    #[inline]
    pub fn q_unlabeled(&self) -> f64 {
        self.pi * self.w0 / (1.0 + self.w0)
    }

    /// Pseudo-node weight per unit degree: `1 / lambda` labeled, `w0` unlabeled.
    #[inline]
    pub fn pseudo_weight(&self, labeled: bool) -> f64 {
        if labeled {
            1.0 / self.lambda
        } else {
            self.w0
        }
    }
}

pub(crate) fn check_label(y: u8) -> Result<()> {
    if y > 1 {
        return Err(param("label", format!("must be 0 or 1, got {y}")));
    }
    Ok(())
}

/// Partition of the points into labeled and unlabeled sets.
///
/// `labeled()` preserves the order in which labels arrived.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelState {
    observed: Vec<Option<u8>>,
    order: Vec<usize>,
    pi: f64,
}

impl LabelState {
    pub fn new(n: usize, pi: f64) -> Self {
        LabelState {
            observed: vec![None; n],
            order: Vec::new(),
            pi,
        }
    }

    pub fn with_labels(n: usize, pi: f64, initial: &[(usize, u8)]) -> Result<Self> {
        let mut s = Self::new(n, pi);
        for &(i, y) in initial {
            s.label(i, y)?;
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.observed.len()
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn label(&mut self, i: usize, y: u8) -> Result<()> {
        self.check_unlabeled(i)?;
        check_label(y)?;
        self.observed[i] = Some(y);
        self.order.push(i);
        Ok(())
    }

    /// Errors unless `i` is a valid, currently unlabeled index.
    pub fn check_unlabeled(&self, i: usize) -> Result<()> {
        match self.observed.get(i) {
            None => Err(Error::OutOfRange {
                index: i,
                n: self.n(),
            }),
            Some(Some(_)) => Err(Error::AlreadyLabeled(i)),
            Some(None) => Ok(()),
        }
    }

    #[inline]
    pub fn is_labeled(&self, i: usize) -> bool {
        self.observed[i].is_some()
    }

    #[inline]
    pub fn label_of(&self, i: usize) -> Option<u8> {
        self.observed[i]
    }

    /// Labeled indices in arrival order.
    pub fn labeled(&self) -> &[usize] {
        &self.order
    }

    /// `(index, label)` pairs in arrival order.
    pub fn labeled_pairs(&self) -> Vec<(usize, u8)> {
        self.order
            .iter()
            .map(|&i| (i, self.observed[i].expect("ordered index is labeled")))
            .collect()
    }

    pub fn unlabeled(&self) -> impl Iterator<Item = usize> + '_ {
        self.observed
            .iter()
            .enumerate()
            .filter_map(|(i, y)| y.is_none().then_some(i))
    }

    pub fn n_labeled(&self) -> usize {
        self.order.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n() - self.order.len()
    }

    /// `y'`: observed label on labeled points, `pi` elsewhere.
    #[inline]
    pub fn yprime(&self, i: usize) -> f64 {
        self.observed[i].map_or(self.pi, f64::from)
    }

    /// Unlabeled indicator `u_i`.
    #[inline]
    pub fn u(&self, i: usize) -> f64 {
        if self.observed[i].is_none() {
            1.0
        } else {
            0.0
        }
    }

    pub fn yprime_vec(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.yprime(i)).collect()
    }
}
