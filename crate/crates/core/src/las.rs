//! Linearized active search.
//!
//! With `A = X^T X` the harmonic solution becomes
//!
//! ```text
//! f = q + R X^T K^-1 X q,    K = I - X R X^T,    R = B D^-1,    q = (I - B) y'
//! ```
//!
//! so the only inverse is `r x r`. A new label changes one diagonal entry of
//! `R`, which makes `K` change by `gamma x_i x_i^T`; `K^-1` follows by a
//! rank-one correction. The impact factor is assembled from `J = diag(X^T
//! K^-1 X)` and `z = R u`, both maintained alongside `K^-1`. Initialization
//! costs `O(nr^2 + r^3)`, every later step `O(nr + r^2)`.

use std::sync::Arc;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::engine::{ActiveSearch, EngineKind, Scores};
use crate::error::{Error, Result};
use crate::features::negative_similarity_fraction;
use crate::params::{check_label, HyperParams, LabelState};
use crate::select;

pub const DEFAULT_REFRESH_EVERY: usize = 500;

/// Rank-one and impact denominators closer to zero than this are singular.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Drift between maintained and recomputed quantities expected after a
/// refresh interval.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

/// Drift above this is reported as a warning.
pub const DRIFT_WARN: f64 = 1e-4;

/// Fraction of negative sampled similarities above which a diagnostic is
/// logged at initialization.
pub const NEGATIVE_SIMILARITY_WARN: f64 = 0.01;

/// Largest elementwise differences between incrementally maintained values
/// and a from-scratch recomputation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub kinv: f64,
    pub j: f64,
    pub f: f64,
    /// `max |K^-1 K - I|` of the fresh inverse.
    pub inverse_residual: f64,
}

impl Drift {
    pub fn max(&self) -> f64 {
        self.kinv.max(self.j).max(self.f)
    }
}

/// Intermediate vectors of one impact-factor evaluation.
#[derive(Debug, Clone)]
pub struct ImpactScratch {
    /// `P_ii` once `i` is labeled: `d_i / lambda`.
    pub lvec: DVector<f64>,
    /// `P_ii` while `i` is unlabeled: `w0 d_i`.
    pub uvec: DVector<f64>,
    pub delta_p: DVector<f64>,
    pub diag_minv: DVector<f64>,
    pub minv_u: DVector<f64>,
    /// Summed change of `f` over `U` (including `i`) if `i` turned positive.
    pub delta_big_f: DVector<f64>,
    /// Change of `f_i` itself if `i` turned positive.
    pub delta_f_tilde: DVector<f64>,
    /// `f * (delta_big_f - delta_f_tilde)`, zero on labeled points.
    pub raw: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct LasState {
    x: Arc<DMatrix<f64>>,
    degrees: DVector<f64>,
    rdiag: DVector<f64>,
    q: DVector<f64>,
    kinv: DMatrix<f64>,
    f: DVector<f64>,
    j: DVector<f64>,
    z: DVector<f64>,
    labels: LabelState,
    params: HyperParams,
    iteration: usize,
    refresh_every: usize,
    since_refresh: usize,
    last_drift: Option<Drift>,
    negative_fraction: f64,
}

fn degrees_of(x: &DMatrix<f64>) -> DVector<f64> {
    let total = x.column_sum();
    x.tr_mul(&total)
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

impl LasState {
    pub fn init(d: &Dataset, initial: &[(usize, u8)], params: HyperParams) -> Result<Self> {
        Self::init_shared(d.shared_x(), initial, params, DEFAULT_REFRESH_EVERY)
    }

    pub fn init_shared(
        x: Arc<DMatrix<f64>>,
        initial: &[(usize, u8)],
        params: HyperParams,
        refresh_every: usize,
    ) -> Result<Self> {
        params.validate()?;
        if refresh_every == 0 {
            return Err(crate::error::param("refresh_every", "must be at least 1"));
        }
        let n = x.ncols();
        let labels = LabelState::with_labels(n, params.pi, initial)?;
        let degrees = degrees_of(&x);
        if let Some(index) = degrees.iter().position(|&d| d == 0.0) {
            return Err(Error::ZeroDegree { index });
        }
        let negative_fraction = negative_similarity_fraction(&x, 1000, 0);
        if negative_fraction > NEGATIVE_SIMILARITY_WARN {
            warn!(
                "{:.1}% of sampled similarities are negative; f is no longer a \
                 random-walk probability",
                100.0 * negative_fraction
            );
        }
        let mut rdiag = DVector::zeros(n);
        let mut q = DVector::zeros(n);
        let mut z = DVector::zeros(n);
        for i in 0..n {
            match labels.label_of(i) {
                Some(y) => {
                    rdiag[i] = params.beta_labeled() / degrees[i];
                    q[i] = params.q_labeled(y);
                }
                None => {
                    rdiag[i] = params.beta_unlabeled() / degrees[i];
                    q[i] = params.q_unlabeled();
                    z[i] = rdiag[i];
                }
            }
        }
        let r = x.nrows();
        let mut st = LasState {
            x,
            degrees,
            rdiag,
            q,
            kinv: DMatrix::zeros(r, r),
            f: DVector::zeros(n),
            j: DVector::zeros(n),
            z,
            labels,
            params,
            iteration: 0,
            refresh_every,
            since_refresh: 0,
            last_drift: None,
            negative_fraction,
        };
        let (kinv, _) = st.fresh_inverse()?;
        st.j = st.j_from(&kinv);
        st.kinv = kinv;
        st.f = st.f_from(&st.kinv);
        Ok(st)
    }

    /// `K = I - X R X^T`.
    pub fn k_matrix(&self) -> DMatrix<f64> {
        let r = self.x.nrows();
        let mut xr = (*self.x).clone();
        for (mut col, &s) in xr.column_iter_mut().zip(self.rdiag.iter()) {
            col *= s;
        }
        let mut k = DMatrix::identity(r, r);
        k.gemm(-1.0, &xr, &self.x.transpose(), 1.0);
        k
    }

    fn fresh_inverse(&self) -> Result<(DMatrix<f64>, f64)> {
        let k = self.k_matrix();
        let kinv = k.clone().try_inverse().ok_or_else(|| {
            Error::Numerical(format!("K is singular (|K|_1 = {:e})", norm1(&k)))
        })?;
        let condition = norm1(&k) * norm1(&kinv);
        if !condition.is_finite() {
            return Err(Error::Numerical(format!(
                "K inverse is not finite (condition estimate {condition:e})"
            )));
        }
        if condition > 1e12 {
            warn!("K condition estimate {condition:e}");
        }
        let r = k.nrows();
        let residual = (&kinv * &k - DMatrix::<f64>::identity(r, r)).amax();
        if residual > DRIFT_TOLERANCE {
            warn!("K^-1 K deviates from I by {residual:e} (condition estimate {condition:e})");
        }
        Ok((kinv, residual))
    }

    fn j_from(&self, kinv: &DMatrix<f64>) -> DVector<f64> {
        let y = kinv * &*self.x;
        DVector::from_iterator(
            self.x.ncols(),
            self.x
                .column_iter()
                .zip(y.column_iter())
                .map(|(a, b)| a.dot(&b)),
        )
    }

    fn f_from(&self, kinv: &DMatrix<f64>) -> DVector<f64> {
        let xq = &*self.x * &self.q;
        let w = kinv * xq;
        let mut f = self.x.tr_mul(&w);
        f.component_mul_assign(&self.rdiag);
        f += &self.q;
        f
    }

    /// Records label `y` for unlabeled point `i` by a rank-one update.
    ///
    /// Every `refresh_every` updates the maintained inverse and `J` are
    /// recomputed from scratch; see [`LasState::refresh`].
    pub fn update(&mut self, i: usize, y: u8) -> Result<()> {
        self.labels.check_unlabeled(i)?;
        check_label(y)?;
        let h = self.params;
        let gamma = -(h.beta_labeled() - h.beta_unlabeled()) / self.degrees[i];
        if gamma != 0.0 {
            let xi = self.x.column(i);
            let v = &self.kinv * xi;
            let denom = 1.0 + gamma * xi.dot(&v);
            if denom.abs() < SINGULAR_EPS {
                return Err(Error::SingularUpdate { index: i, denom });
            }
            let c = gamma / denom;
            self.kinv.ger(-c, &v, &v, 1.0);
            let w = self.x.tr_mul(&v);
            for (jt, wt) in self.j.iter_mut().zip(w.iter()) {
                *jt -= c * wt * wt;
            }
        }
        self.rdiag[i] = h.beta_labeled() / self.degrees[i];
        self.q[i] = h.q_labeled(y);
        self.z[i] = 0.0;
        self.labels.label(i, y)?;
        self.f = self.f_from(&self.kinv);
        self.iteration += 1;
        self.since_refresh += 1;
        if self.since_refresh >= self.refresh_every {
            self.refresh()?;
        }
        Ok(())
    }

    /// Recomputes `K^-1`, `J` and `f` from scratch, adopts the fresh values
    /// and returns how far the maintained ones had drifted.
    pub fn refresh(&mut self) -> Result<Drift> {
        let (kinv, inverse_residual) = self.fresh_inverse()?;
        let j = self.j_from(&kinv);
        let f = self.f_from(&kinv);
        let drift = Drift {
            kinv: (&kinv - &self.kinv).amax(),
            j: (&j - &self.j).amax(),
            f: (&f - &self.f).amax(),
            inverse_residual,
        };
        if drift.max() > DRIFT_WARN {
            warn!("incremental state drifted by {:e}; adopting fresh values", drift.max());
        } else if drift.max() > DRIFT_TOLERANCE {
            debug!("incremental state drifted by {:e}", drift.max());
        }
        self.kinv = kinv;
        self.j = j;
        self.f = f;
        self.since_refresh = 0;
        self.last_drift = Some(drift);
        Ok(drift)
    }

    /// Raw impact factor and its intermediates, in `O(nr + r^2)`.
    pub fn impact(&self) -> Result<ImpactScratch> {
        let n = self.x.ncols();
        let h = self.params;
        let lvec = &self.degrees / h.lambda;
        let uvec = &self.degrees * h.w0;
        let delta_p = &lvec - &uvec;
        let diag_minv = DVector::from_fn(n, |t, _| (1.0 + self.rdiag[t] * self.j[t]) * self.rdiag[t]);

        let mut delta_f_tilde = DVector::zeros(n);
        for t in self.labels.unlabeled() {
            let denom = 1.0 + delta_p[t] * diag_minv[t];
            if denom.abs() < SINGULAR_EPS {
                return Err(Error::SingularImpact { index: t });
            }
            delta_f_tilde[t] =
                (lvec[t] - h.pi * uvec[t] - delta_p[t] * self.f[t]) * diag_minv[t] / denom;
        }

        let xz = &*self.x * &self.z;
        let mut minv_u = self.x.tr_mul(&(&self.kinv * xz));
        minv_u.component_mul_assign(&self.rdiag);
        minv_u += &self.z;

        let mut delta_big_f = DVector::zeros(n);
        let mut raw = DVector::zeros(n);
        for t in self.labels.unlabeled() {
            delta_big_f[t] = (lvec[t]
                - h.pi * uvec[t]
                - delta_p[t] * (self.f[t] + delta_f_tilde[t]))
                * minv_u[t];
            raw[t] = self.f[t] * (delta_big_f[t] - delta_f_tilde[t]);
        }
        Ok(ImpactScratch {
            lvec,
            uvec,
            delta_p,
            diag_minv,
            minv_u,
            delta_big_f,
            delta_f_tilde,
            raw,
        })
    }

    /// Impact factor rescaled to the mean of `f` over the unlabeled points.
    pub fn scaled_impact(&self) -> Result<DVector<f64>> {
        let raw = self.impact()?.raw;
        Ok(select::scale_impact(&raw, &self.f, &self.labels))
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn rdiag(&self) -> &DVector<f64> {
        &self.rdiag
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn kinv(&self) -> &DMatrix<f64> {
        &self.kinv
    }

    pub fn j(&self) -> &DVector<f64> {
        &self.j
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn refresh_every(&self) -> usize {
        self.refresh_every
    }

    pub fn last_drift(&self) -> Option<Drift> {
        self.last_drift
    }

    pub fn negative_similarity_fraction(&self) -> f64 {
        self.negative_fraction
    }

    pub fn snapshot(&self) -> LasSnapshot {
        let r = self.kinv.nrows();
        LasSnapshot {
            format: LAS_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            n: self.x.ncols(),
            r,
            params: self.params,
            refresh_every: self.refresh_every,
            iteration: self.iteration,
            since_refresh: self.since_refresh,
            labels: self.labels.labeled_pairs(),
            degrees: self.degrees.as_slice().to_vec(),
            rdiag: self.rdiag.as_slice().to_vec(),
            q: self.q.as_slice().to_vec(),
            f: self.f.as_slice().to_vec(),
            j: self.j.as_slice().to_vec(),
            z: self.z.as_slice().to_vec(),
            kinv: self.kinv.transpose().as_slice().to_vec(),
        }
    }

    /// Rebuilds a state from a snapshot taken on the same feature matrix.
    pub fn restore(x: Arc<DMatrix<f64>>, snap: &LasSnapshot) -> Result<Self> {
        if snap.format != LAS_FORMAT || snap.version != SNAPSHOT_VERSION {
            return Err(Error::Precondition(format!(
                "unsupported snapshot {} v{}",
                snap.format, snap.version
            )));
        }
        let (r, n) = x.shape();
        if snap.n != n || snap.r != r {
            return Err(Error::Shape(format!(
                "snapshot is for {}x{}, data is {r}x{n}",
                snap.r, snap.n
            )));
        }
        let vec = |name: &str, v: &[f64]| {
            if v.len() == n {
                Ok(DVector::from_column_slice(v))
            } else {
                Err(Error::Shape(format!("snapshot `{name}` has length {}", v.len())))
            }
        };
        if snap.kinv.len() != r * r {
            return Err(Error::Shape("snapshot `kinv` has wrong size".into()));
        }
        snap.params.validate()?;
        let labels = LabelState::with_labels(n, snap.params.pi, &snap.labels)?;
        Ok(LasState {
            degrees: vec("degrees", &snap.degrees)?,
            rdiag: vec("rdiag", &snap.rdiag)?,
            q: vec("q", &snap.q)?,
            f: vec("f", &snap.f)?,
            j: vec("j", &snap.j)?,
            z: vec("z", &snap.z)?,
            kinv: DMatrix::from_row_slice(r, r, &snap.kinv),
            negative_fraction: negative_similarity_fraction(&x, 1000, 0),
            x,
            labels,
            params: snap.params,
            iteration: snap.iteration,
            refresh_every: snap.refresh_every.max(1),
            since_refresh: snap.since_refresh,
            last_drift: None,
        })
    }
}

pub const LAS_FORMAT: &str = "las-state";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Serialized [`LasState`]. Vectors have length `n`; `kinv` is `r x r` in
/// row-major order; `labels` lists `(index, label)` in arrival order. The
/// feature matrix itself is not included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LasSnapshot {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub r: usize,
    pub params: HyperParams,
    pub refresh_every: usize,
    pub iteration: usize,
    pub since_refresh: usize,
    pub labels: Vec<(usize, u8)>,
    pub degrees: Vec<f64>,
    pub rdiag: Vec<f64>,
    pub q: Vec<f64>,
    pub f: Vec<f64>,
    pub j: Vec<f64>,
    pub z: Vec<f64>,
    pub kinv: Vec<f64>,
}

impl ActiveSearch for LasState {
    fn kind(&self) -> EngineKind {
        EngineKind::Las
    }

    fn f(&self) -> &DVector<f64> {
        &self.f
    }

    fn labels(&self) -> &LabelState {
        &self.labels
    }

    fn params(&self) -> &HyperParams {
        &self.params
    }

    fn scores(&self) -> Result<Scores> {
        let im = if self.params.alpha == 0.0 {
            None
        } else {
            Some(self.scaled_impact()?)
        };
        Ok(Scores::new(self.f.clone(), im, self.params.alpha))
    }

    fn update(&mut self, i: usize, y: u8) -> Result<()> {
        LasState::update(self, i, y)
    }
}
