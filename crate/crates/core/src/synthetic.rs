//! Seeded synthetic datasets used as fixtures, benchmarks and recall
//! surrogates.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{append_bias, unit_normalize, Dataset};
use crate::error::{param, Result};

/// `n` points with i.i.d. `U[0, 1)` coordinates and no labels. All
/// similarities are nonnegative and all degrees positive.
pub fn uniform(r: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(r, n, |_, _| rng.random::<f64>());
    Dataset::from_matrix(x, None).expect("uniform data is valid")
}

/// Like [`uniform`] with each point independently positive with probability
/// `p`.
pub fn uniform_labeled(r: usize, n: usize, p: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(r, n, |_, _| rng.random::<f64>());
    let labels = (0..n).map(|_| u8::from(rng.random::<f64>() < p)).collect();
    Dataset::from_matrix(x, Some(labels)).expect("uniform data is valid")
}

/// Two isotropic Gaussian clusters with unit standard deviation.
///
/// The positive mean sits `separation` further along axis 0 than the
/// negative one; both share `offset` on axis 1, which keeps the clusters
/// away from the origin so that normalized points have positive dot
/// products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoGaussians {
    pub n: usize,
    pub r: usize,
    pub prevalence: f64,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_separation() -> f64 {
    5.0
}

fn default_offset() -> f64 {
    10.0
}

impl TwoGaussians {
    pub fn new(n: usize, r: usize, prevalence: f64, seed: u64) -> Self {
        TwoGaussians {
            n,
            r,
            prevalence,
            separation: default_separation(),
            offset: default_offset(),
            seed,
        }
    }

    pub fn positives(&self) -> usize {
        (self.n as f64 * self.prevalence).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(param("n", "must be at least 1"));
        }
        if self.r < 2 {
            return Err(param("r", "needs at least two dimensions"));
        }
        if !(0.0..=1.0).contains(&self.prevalence) {
            return Err(param("prevalence", "must lie in [0, 1]"));
        }
        if !self.separation.is_finite() || !self.offset.is_finite() {
            return Err(param("separation", "must be finite"));
        }
        Ok(())
    }

    /// Raw cluster coordinates with labels; positives are shuffled among the
    /// negatives.
    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut labels: Vec<u8> = (0..self.n).map(|i| u8::from(i < self.positives())).collect();
        labels.shuffle(&mut rng);
        let mut x = DMatrix::zeros(self.r, self.n);
        for (i, mut col) in x.column_iter_mut().enumerate() {
            for v in col.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            col[1] += self.offset;
            if labels[i] == 1 {
                col[0] += self.separation;
            }
        }
        Dataset::from_matrix(x, Some(labels))
    }

    /// [`TwoGaussians::generate`] followed by unit normalization and a bias
    /// feature, giving `r + 1` features and similarities in `[0, 2]` for
    /// almost every draw.
    pub fn surrogate(&self) -> Result<Dataset> {
        let (d, _) = unit_normalize(&self.generate()?);
        Ok(append_bias(&d))
    }
}

/// A nonnegative two-block instance: points in block 0 live on the first
/// `k` coordinates, points in block 1 on the next `k`, and every point gets
/// `U[0, eps)` noise on the other block's coordinates. Returns the data and
/// the block of each point; the first `n / 2` points form block 0.
pub fn two_block(n: usize, k: usize, eps: f64, seed: u64) -> (Dataset, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split: Vec<bool> = (0..n).map(|i| i >= n / 2).collect();
    let x = DMatrix::from_fn(2 * k, n, |row, i| {
        let own = (row >= k) == split[i];
        if own {
            rng.random_range(0.5..1.5)
        } else if eps > 0.0 {
            rng.random_range(0.0..eps)
        } else {
            0.0
        }
    });
    let d = Dataset::from_matrix(x, None).expect("two-block data is valid");
    (d, split)
}

/// A planar swiss roll `(t cos t, t sin t)` with `t in [1.5 pi, 4.5 pi)`.
/// Points on the outer half of the roll are positive.
pub fn swiss_roll(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (1.5 * PI, 4.5 * PI);
    let mut labels = Vec::with_capacity(n);
    let mut x = DMatrix::zeros(2, n);
    for i in 0..n {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        let jitter = |rng: &mut ChaCha8Rng| noise * rng.sample::<f64, _>(StandardNormal);
        x[(0, i)] = t * t.cos() + jitter(&mut rng);
        x[(1, i)] = t * t.sin() + jitter(&mut rng);
        labels.push(u8::from(t >= 0.5 * (lo + hi)));
    }
    Dataset::from_matrix(x, Some(labels)).expect("swiss roll is valid")
}

/// Gaussian bumps `exp(-|x - c|^2 / (2 width^2))` around each anchor
/// (a column of `anchors`). The features are nonnegative and local:
/// the dot product of two points is large only when both are near the same
/// anchors.
pub fn bump_features(d: &Dataset, anchors: &DMatrix<f64>, width: f64) -> Result<Dataset> {
    if anchors.nrows() != d.r() {
        return Err(crate::error::Error::Shape(format!(
            "anchors have {} coordinates, data has {}",
            anchors.nrows(),
            d.r()
        )));
    }
    if !(width > 0.0) {
        return Err(param("width", "must be positive"));
    }
    let x = d.x();
    let z = DMatrix::from_fn(anchors.ncols(), d.n(), |a, i| {
        let dist2 = (x.column(i) - anchors.column(a)).norm_squared();
        (-dist2 / (2.0 * width * width)).exp()
    });
    Dataset::new(
        z,
        d.labels().map(<[u8]>::to_vec),
        d.ids().to_vec(),
        d.meta().map(<[String]>::to_vec),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_deterministic() {
        assert_eq!(uniform(3, 10, 4).x(), uniform(3, 10, 4).x());
        assert_ne!(uniform(3, 10, 4).x(), uniform(3, 10, 5).x());
    }

    #[test]
    fn two_gaussians_has_exact_prevalence() {
        let g = TwoGaussians::new(5000, 20, 0.01, 3);
        let d = g.generate().unwrap();
        assert_eq!(d.positives(), Some(50));
        let s = g.surrogate().unwrap();
        assert_eq!(s.r(), 21);
        assert_eq!(s.labels(), d.labels());
        // cluster offset keeps every normalized similarity positive
        let x = s.x();
        for i in (0..5000).step_by(97) {
            for j in (0..5000).step_by(89) {
                assert!(x.column(i).dot(&x.column(j)) > 0.0);
            }
        }
    }

    #[test]
    fn positive_cluster_is_shifted() {
        let d = TwoGaussians::new(2000, 5, 0.5, 1).generate().unwrap();
        let labels = d.labels().unwrap();
        let mean = |y: u8| {
            let idx: Vec<usize> = (0..2000).filter(|&i| labels[i] == y).collect();
            idx.iter().map(|&i| d.x()[(0, i)]).sum::<f64>() / idx.len() as f64
        };
        assert!((mean(1) - mean(0) - 5.0).abs() < 0.2);
    }

    #[test]
    fn two_block_without_noise_is_block_diagonal() {
        let (d, split) = two_block(10, 3, 0.0, 0);
        let a = d.x().tr_mul(d.x());
        for i in 0..10 {
            for j in 0..10 {
                if split[i] != split[j] {
                    assert_eq!(a[(i, j)], 0.0);
                } else {
                    assert!(a[(i, j)] > 0.0);
                }
            }
        }
    }

    #[test]
    fn swiss_roll_halves() {
        let d = swiss_roll(100, 0.0, 0);
        assert_eq!(d.positives(), Some(50));
        let b = bump_features(&d, &DMatrix::from_column_slice(2, 2, &[0.0, 0.0, 5.0, 5.0]), 3.0)
            .unwrap();
        assert_eq!(b.r(), 2);
        assert!(b.x().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
