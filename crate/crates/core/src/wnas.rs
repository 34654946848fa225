//! Weighted-neighbor active search.
//!
//! Each unlabeled point is scored by the label-weighted similarity mass of
//! the labeled points, `num_i / den_i` with `num_i = sum_j y_j K_ij` and
//! `den_i = sum_j |K_ij|` over labeled `j`. A new label adds one
//! similarity column to both sums, `O(nr)`. There is no impact term.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::engine::{ActiveSearch, EngineKind, Scores};
use crate::error::{Error, Result};
use crate::params::{check_label, HyperParams, LabelState};

/// Denominators at or below this fall back to the prior.
pub const DEN_EPS: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct WnasState {
    x: Arc<DMatrix<f64>>,
    num: DVector<f64>,
    den: DVector<f64>,
    f: DVector<f64>,
    labels: LabelState,
    params: HyperParams,
}

impl WnasState {
    pub fn init(d: &Dataset, initial: &[(usize, u8)], params: HyperParams) -> Result<Self> {
        Self::init_shared(d.shared_x(), initial, params)
    }

    pub fn init_shared(
        x: Arc<DMatrix<f64>>,
        initial: &[(usize, u8)],
        params: HyperParams,
    ) -> Result<Self> {
        params.validate()?;
        let n = x.ncols();
        let labels = LabelState::with_labels(n, params.pi, initial)?;
        let mut st = WnasState {
            num: DVector::zeros(n),
            den: DVector::zeros(n),
            f: DVector::zeros(n),
            x,
            labels,
            params,
        };
        let unlabeled: Vec<usize> = st.labels.unlabeled().collect();
        for &(j, y) in initial {
            st.accumulate(j, y, &unlabeled);
        }
        st.f = st.compute_scores();
        Ok(st)
    }

    fn accumulate(&mut self, j: usize, y: u8, targets: &[usize]) {
        let xj = self.x.column(j);
        let y = f64::from(y);
        for &i in targets {
            let s = self.x.column(i).dot(&xj);
            self.num[i] += y * s;
            self.den[i] += s.abs();
        }
    }

    fn compute_scores(&self) -> DVector<f64> {
        let pi = self.params.pi;
        DVector::from_fn(self.num.len(), |i, _| match self.labels.label_of(i) {
            Some(y) => f64::from(y),
            None if self.den[i] > DEN_EPS => self.num[i] / self.den[i],
            None => pi,
        })
    }

    pub fn update(&mut self, i: usize, y: u8) -> Result<()> {
        self.labels.check_unlabeled(i)?;
        check_label(y)?;
        self.labels.label(i, y)?;
        let targets: Vec<usize> = self.labels.unlabeled().collect();
        self.accumulate(i, y, &targets);
        let pi = self.params.pi;
        self.f[i] = f64::from(y);
        for t in targets {
            self.f[t] = if self.den[t] > DEN_EPS {
                self.num[t] / self.den[t]
            } else {
                pi
            };
        }
        Ok(())
    }

    pub fn num(&self) -> &DVector<f64> {
        &self.num
    }

    pub fn den(&self) -> &DVector<f64> {
        &self.den
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn snapshot(&self) -> WnasSnapshot {
        WnasSnapshot {
            format: WNAS_FORMAT.into(),
            version: crate::las::SNAPSHOT_VERSION,
            n: self.x.ncols(),
            r: self.x.nrows(),
            params: self.params,
            labels: self.labels.labeled_pairs(),
            num: self.num.as_slice().to_vec(),
            den: self.den.as_slice().to_vec(),
        }
    }

    pub fn restore(x: Arc<DMatrix<f64>>, snap: &WnasSnapshot) -> Result<Self> {
        if snap.format != WNAS_FORMAT || snap.version != crate::las::SNAPSHOT_VERSION {
            return Err(Error::Precondition(format!(
                "unsupported snapshot {} v{}",
                snap.format, snap.version
            )));
        }
        let (r, n) = x.shape();
        if snap.n != n || snap.r != r || snap.num.len() != n || snap.den.len() != n {
            return Err(Error::Shape(format!(
                "snapshot is for {}x{}, data is {r}x{n}",
                snap.r, snap.n
            )));
        }
        snap.params.validate()?;
        let mut st = WnasState {
            x,
            num: DVector::from_column_slice(&snap.num),
            den: DVector::from_column_slice(&snap.den),
            f: DVector::zeros(n),
            labels: LabelState::with_labels(n, snap.params.pi, &snap.labels)?,
            params: snap.params,
        };
        st.f = st.compute_scores();
        Ok(st)
    }
}

pub const WNAS_FORMAT: &str = "wnas-state";

/// Serialized [`WnasState`]; the feature matrix is not included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WnasSnapshot {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub r: usize,
    pub params: HyperParams,
    pub labels: Vec<(usize, u8)>,
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl ActiveSearch for WnasState {
    fn kind(&self) -> EngineKind {
        EngineKind::Wnas
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
        Ok(Scores::new(self.f.clone(), None, 0.0))
    }

    fn update(&mut self, i: usize, y: u8) -> Result<()> {
        WnasState::update(self, i, y)
    }
}
