//! Dense reference engine over the explicit similarity graph.
//!
//! Builds `A = X^T X` and solves `(I - B D^-1 A) f = (I - B) y'` directly
//! at every iteration. Memory is `O(n^2)` and each iteration `O(n^3)`, so the
//! graph size is capped; this engine exists to check the linearized one.

use log::warn;
use nalgebra::{DMatrix, DVector, LU};

use crate::dataset::Dataset;
use crate::engine::{ActiveSearch, EngineKind, Scores};
use crate::error::{Error, Result};
use crate::params::{HyperParams, LabelState};
use crate::select;

pub const DEFAULT_CAP: usize = 5000;

/// Condition estimates above this attach a warning to a [`Solution`].
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct DenseGraph {
    a: DMatrix<f64>,
    degrees: DVector<f64>,
}

impl DenseGraph {
    pub fn from_adjacency(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape(format!("adjacency is {:?}", a.shape())));
        }
        let scale = a.amax().max(1.0);
        let n = a.nrows();
        for i in 0..n {
            for j in i + 1..n {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::Precondition(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let degrees = a.column_sum();
        Ok(DenseGraph { a, degrees })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    fn check_degrees(&self) -> Result<()> {
        match self.degrees.iter().position(|&d| d == 0.0) {
            Some(index) => Err(Error::ZeroDegree { index }),
            None => Ok(()),
        }
    }
}

pub fn build_graph(d: &Dataset) -> Result<DenseGraph> {
    build_graph_capped(d, DEFAULT_CAP)
}

pub fn build_graph_capped(d: &Dataset, cap: usize) -> Result<DenseGraph> {
    if d.n() > cap {
        return Err(Error::TooLarge { n: d.n(), cap });
    }
    let a = d.x().tr_mul(d.x());
    DenseGraph::from_adjacency(a)
}

/// `S = I - B D^-1 A` and `b = (I - B) y'`.
pub fn system(g: &DenseGraph, s: &LabelState, h: &HyperParams) -> (DMatrix<f64>, DVector<f64>) {
    let n = g.n();
    let mut m = DMatrix::identity(n, n);
    let mut b = DVector::zeros(n);
    for i in 0..n {
        let (beta, q) = match s.label_of(i) {
            Some(y) => (h.beta_labeled(), h.q_labeled(y)),
            None => (h.beta_unlabeled(), h.q_unlabeled()),
        };
        let scale = beta / g.degrees[i];
        for j in 0..n {
            m[(i, j)] -= scale * g.a[(i, j)];
        }
        b[i] = q;
    }
    (m, b)
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub f: DVector<f64>,
    /// `max |S f - b|`.
    pub residual: f64,
    /// `|S|_1 |S^-1|_1`.
    pub condition: f64,
    pub warning: Option<String>,
}

struct Factored {
    f: DVector<f64>,
    inverse: DMatrix<f64>,
    residual: f64,
    condition: f64,
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

fn factor(g: &DenseGraph, s: &LabelState, h: &HyperParams) -> Result<Factored> {
    g.check_degrees()?;
    let (m, b) = system(g, s, h);
    let lu = LU::new(m.clone());
    let f = lu
        .solve(&b)
        .ok_or_else(|| Error::Numerical("harmonic system is singular".into()))?;
    let inverse = lu
        .try_inverse()
        .ok_or_else(|| Error::Numerical("harmonic system is singular".into()))?;
    let residual = (&m * &f - &b).amax();
    let condition = norm1(&m) * norm1(&inverse);
    Ok(Factored {
        f,
        inverse,
        residual,
        condition,
    })
}

fn solve_only(g: &DenseGraph, s: &LabelState, h: &HyperParams) -> Result<DVector<f64>> {
    let (m, b) = system(g, s, h);
    LU::new(m)
        .solve(&b)
        .ok_or_else(|| Error::Numerical("harmonic system is singular".into()))
}

fn condition_warning(condition: f64) -> Option<String> {
    (condition > ILL_CONDITIONED || !condition.is_finite()).then(|| {
        let msg = format!("harmonic system condition estimate {condition:e}");
        warn!("{msg}");
        msg
    })
}

/// Exact minimizer of the soft-label energy.
pub fn solve_f(g: &DenseGraph, s: &LabelState, h: &HyperParams) -> Result<Solution> {
    let fac = factor(g, s, h)?;
    Ok(Solution {
        warning: condition_warning(fac.condition),
        f: fac.f,
        residual: fac.residual,
        condition: fac.condition,
    })
}

/// Raw impact factor by relabel-and-resolve: for each unlabeled `i`, label
/// it positive, solve again, and weight the summed change over the other
/// unlabeled points by `f_i`. Labeled entries are zero.
pub fn impact_naive(
    g: &DenseGraph,
    s: &LabelState,
    h: &HyperParams,
    f: &DVector<f64>,
) -> Result<DVector<f64>> {
    g.check_degrees()?;
    let mut im = DVector::zeros(g.n());
    let unlabeled: Vec<usize> = s.unlabeled().collect();
    for &i in &unlabeled {
        let mut relabeled = s.clone();
        relabeled.label(i, 1)?;
        let fplus = solve_only(g, &relabeled, h)?;
        let change: f64 = unlabeled
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| fplus[j] - f[j])
            .sum();
        im[i] = f[i] * change;
    }
    Ok(im)
}

/// Raw impact factor from the explicit inverse `G = S^-1`.
///
/// Labeling `i` positive changes row `i` of `S` and entry `i` of `b`, so
/// `f+ - f = G e_i (db - w.f) / (1 + w.G e_i)` with `w = -k_i A_i` and
/// `k_i = (beta_L - beta_U) / d_i`. All candidates together cost `O(n^2)`.
pub fn impact_dense(
    g: &DenseGraph,
    s: &LabelState,
    h: &HyperParams,
    f: &DVector<f64>,
    inverse: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let n = g.n();
    let af = &g.a * f;
    let db = h.q_labeled(1) - h.q_unlabeled();
    let dbeta = h.beta_labeled() - h.beta_unlabeled();
    let unlabeled: Vec<usize> = s.unlabeled().collect();
    let mut im = DVector::zeros(n);
    for &i in &unlabeled {
        let k = dbeta / g.degrees[i];
        let col = inverse.column(i);
        let ag_ii = g.a.row(i).transpose().dot(&col);
        let denom = 1.0 - k * ag_ii;
        if denom.abs() <= 1e-12 {
            return Err(Error::SingularImpact { index: i });
        }
        let coef = (db + k * af[i]) / denom;
        let colsum: f64 = unlabeled.iter().filter(|&&j| j != i).map(|&j| col[j]).sum();
        im[i] = f[i] * colsum * coef;
    }
    Ok(im)
}

/// `argmax_U f + alpha * im` with ties to the lowest index. `im` must
/// already be rescaled.
pub fn select_query(
    f: &DVector<f64>,
    im: Option<&DVector<f64>>,
    s: &LabelState,
    h: &HyperParams,
) -> Result<usize> {
    select::argmax_unlabeled(&select::criterion(f, im, h.alpha), s)
}

/// Diagonal of `P`: `d_i / lambda` on labeled points, `w0 d_i` elsewhere.
pub fn pseudo_weights(g: &DenseGraph, s: &LabelState, h: &HyperParams) -> DVector<f64> {
    DVector::from_fn(g.n(), |i, _| h.pseudo_weight(s.is_labeled(i)) * g.degrees[i])
}

/// `M = D + P - A`.
pub fn m_matrix(g: &DenseGraph, s: &LabelState, h: &HyperParams) -> DMatrix<f64> {
    let p = pseudo_weights(g, s, h);
    let mut m = -g.a.clone();
    for i in 0..g.n() {
        m[(i, i)] += g.degrees[i] + p[i];
    }
    m
}

/// `M^-1 P`, the absorption probabilities into pseudo-nodes.
pub fn absorption_matrix(g: &DenseGraph, s: &LabelState, h: &HyperParams) -> Result<DMatrix<f64>> {
    g.check_degrees()?;
    let m = m_matrix(g, s, h);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Numerical("M is singular".into()))?;
    let p = pseudo_weights(g, s, h);
    let mut out = inv;
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= p[j];
    }
    Ok(out)
}

/// The dense engine, recomputing everything from scratch per label.
#[derive(Debug, Clone)]
pub struct AsgEngine {
    graph: DenseGraph,
    labels: LabelState,
    params: HyperParams,
    f: DVector<f64>,
    inverse: DMatrix<f64>,
    condition: f64,
}

impl AsgEngine {
    pub fn new(d: &Dataset, initial: &[(usize, u8)], params: HyperParams) -> Result<Self> {
        Self::with_cap(d, initial, params, DEFAULT_CAP)
    }

    pub fn with_cap(
        d: &Dataset,
        initial: &[(usize, u8)],
        params: HyperParams,
        cap: usize,
    ) -> Result<Self> {
        params.validate()?;
        let graph = build_graph_capped(d, cap)?;
        let labels = LabelState::with_labels(d.n(), params.pi, initial)?;
        let mut engine = AsgEngine {
            graph,
            labels,
            params,
            f: DVector::zeros(0),
            inverse: DMatrix::zeros(0, 0),
            condition: 0.0,
        };
        engine.resolve()?;
        Ok(engine)
    }

    fn resolve(&mut self) -> Result<()> {
        let fac = factor(&self.graph, &self.labels, &self.params)?;
        condition_warning(fac.condition);
        self.f = fac.f;
        self.inverse = fac.inverse;
        self.condition = fac.condition;
        Ok(())
    }

    pub fn graph(&self) -> &DenseGraph {
        &self.graph
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn impact_raw(&self) -> Result<DVector<f64>> {
        impact_dense(&self.graph, &self.labels, &self.params, &self.f, &self.inverse)
    }
}

impl ActiveSearch for AsgEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Asg
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
            let raw = self.impact_raw()?;
            Some(select::scale_impact(&raw, &self.f, &self.labels))
        };
        Ok(Scores::new(self.f.clone(), im, self.params.alpha))
    }

    fn update(&mut self, i: usize, y: u8) -> Result<()> {
        let before = self.labels.clone();
        self.labels.label(i, y)?;
        if let Err(e) = self.resolve() {
            self.labels = before;
            return Err(e);
        }
        Ok(())
    }
}
