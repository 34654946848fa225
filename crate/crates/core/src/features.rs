//! Random Fourier features for the RBF kernel.
//!
//! `phi(x) = sqrt(2 / D) cos(W x + b)` with `W_kj ~ N(0, 1 / sigma^2)` and
//! `b_k ~ U[0, 2 pi)`, so `phi(x) . phi(y)` estimates
//! `exp(-|x - y|^2 / (2 sigma^2))`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{param, Error, Result};

/// The serialized form of an [`RffMap`]. `W` and `b` are regenerated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RffSpec {
    pub seed: u64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub r: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct RffMap {
    spec: RffSpec,
    w: DMatrix<f64>,
    b: DVector<f64>,
}

impl RffMap {
    pub fn fit(r: usize, dim: usize, sigma: f64, seed: u64) -> Result<Self> {
        Self::from_spec(RffSpec {
            seed,
            dim,
            r,
            sigma,
        })
    }

    pub fn from_spec(spec: RffSpec) -> Result<Self> {
        if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
            return Err(param("sigma", format!("must be positive, got {}", spec.sigma)));
        }
        if spec.dim == 0 {
            return Err(param("D", "output dimension must be at least 1"));
        }
        if spec.r == 0 {
            return Err(Error::Shape("input dimension is zero".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, 1.0 / spec.sigma).expect("positive std dev");
        // column-major fill: frequency k, input coordinate j
        let w = DMatrix::from_fn(spec.dim, spec.r, |_, _| normal.sample(&mut rng));
        let phase = Uniform::new(0.0, TAU).expect("nonempty range");
        let b = DVector::from_fn(spec.dim, |_, _| phase.sample(&mut rng));
        Ok(RffMap { spec, w, b })
    }

    pub fn spec(&self) -> RffSpec {
        self.spec
    }

    pub fn frequencies(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn phases(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn map_point(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.spec.r {
            return Err(Error::Shape(format!(
                "point has {} features, map expects {}",
                x.len(),
                self.spec.r
            )));
        }
        let scale = (2.0 / self.spec.dim as f64).sqrt();
        let mut z = &self.w * x + &self.b;
        z.apply(|v| *v = scale * v.cos());
        Ok(z)
    }

    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        if d.r() != self.spec.r {
            return Err(Error::Shape(format!(
                "dataset has {} features, map expects {}",
                d.r(),
                self.spec.r
            )));
        }
        let scale = (2.0 / self.spec.dim as f64).sqrt();
        let mut z = &self.w * d.x();
        for mut col in z.column_iter_mut() {
            for (v, b) in col.iter_mut().zip(self.b.iter()) {
                *v = scale * (*v + b).cos();
            }
        }
        Dataset::new(
            z,
            d.labels().map(<[u8]>::to_vec),
            d.ids().to_vec(),
            d.meta().map(<[String]>::to_vec),
        )
    }
}

/// Median pairwise Euclidean distance over a sample of at most
/// `sample` points.
pub fn median_bandwidth(d: &Dataset, sample: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = if d.n() <= sample {
        (0..d.n()).collect()
    } else {
        rand::seq::index::sample(&mut rng, d.n(), sample).into_vec()
    };
    let x = d.x();
    let mut dists = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            dists.push((x.column(i) - x.column(j)).norm());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    let mid = dists.len() / 2;
    let (_, m, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    if *m > 0.0 {
        *m
    } else {
        1.0
    }
}

/// Fraction of negative dot products among `pairs` random distinct pairs.
pub fn negative_similarity_fraction(x: &DMatrix<f64>, pairs: usize, seed: u64) -> f64 {
    let n = x.ncols();
    if n < 2 || pairs == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut negative = 0usize;
    for _ in 0..pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        if x.column(i).dot(&x.column(j)) < 0.0 {
            negative += 1;
        }
    }
    negative as f64 / pairs as f64
}
