//! One labeling session: an engine plus its query history.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use actsearch_core::{build_engine, ActiveSearch, Dataset, EngineKind, HyperParams, Scores};
use axum::http::StatusCode;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::model::{
    Bin, Candidate, CreateSession, FSummary, HistoryEntry, Metrics, PointRef, ScoredPoint,
    SessionView,
};

pub const DEFAULT_TOP_K: usize = 10;
pub const MAX_TOP_K: usize = 1000;
const HISTOGRAM_BINS: usize = 10;

/// A dataset available to sessions, with an id lookup table.
#[derive(Debug)]
pub struct Registered {
    pub name: String,
    pub data: Dataset,
    index: HashMap<String, usize>,
}

impl Registered {
    pub fn new(name: impl Into<String>, data: Dataset) -> Self {
        let index = data
            .ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Registered {
            name: name.into(),
            data,
            index,
        }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    fn point_ref(&self, index: usize) -> PointRef {
        PointRef {
            index,
            id: self.data.ids()[index].clone(),
        }
    }
}

/// Validated creation request; this is what the session log stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub dataset: String,
    pub engine: EngineKind,
    pub h: HyperParams,
    pub budget: usize,
    pub seed: u64,
    pub free_label: bool,
    pub initial: Vec<(usize, u8)>,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

pub fn parse_label(label: i64) -> Result<u8, ApiError> {
    match label {
        0 => Ok(0),
        1 => Ok(1),
        other => Err(ApiError::validation("label", format!("must be 0 or 1, got {other}"))),
    }
}

impl SessionSpec {
    pub fn resolve(req: &CreateSession, ds: &Registered) -> Result<Self, ApiError> {
        let engine = match &req.engine {
            None => EngineKind::Las,
            Some(s) => s.parse::<EngineKind>()?,
        };
        let h = req.h.resolve()?;
        if req.budget == 0 {
            return Err(ApiError::validation("budget", "must be at least 1"));
        }
        let mut initial = Vec::with_capacity(req.initial.len());
        for l in &req.initial {
            let y = parse_label(l.label)?;
            let i = ds
                .index_of(&l.id)
                .ok_or_else(|| ApiError::validation("initial", format!("unknown point `{}`", l.id)))?;
            if initial.iter().any(|&(j, _)| j == i) {
                return Err(ApiError::validation("initial", format!("point `{}` listed twice", l.id)));
            }
            initial.push((i, y));
        }
        if req.random_start {
            let labels = ds.data.labels().ok_or_else(|| {
                ApiError::validation("random_start", "dataset has no ground-truth labels")
            })?;
            let pos: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == 1 && !initial.iter().any(|&(j, _)| j == i))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
            let &i = pos.choose(&mut rng).ok_or_else(|| {
                ApiError::validation("random_start", "no unlabeled positive to start from")
            })?;
            initial.push((i, 1));
        }
        Ok(SessionSpec {
            dataset: ds.name.clone(),
            engine,
            h,
            budget: req.budget,
            seed: req.seed,
            free_label: req.free_label,
            initial,
            idempotency_key: req.idempotency_key.clone(),
        })
    }
}

pub struct Session {
    pub id: String,
    pub spec: SessionSpec,
    dataset: Arc<Registered>,
    engine: Box<dyn ActiveSearch>,
    scores: Option<Scores>,
    history: Vec<HistoryEntry>,
    created_ms: u64,
    updated_ms: u64,
}

impl Session {
    pub fn new(
        id: String,
        spec: SessionSpec,
        dataset: Arc<Registered>,
        now_ms: u64,
    ) -> Result<Self, ApiError> {
        let engine = build_engine(spec.engine, &dataset.data, &spec.initial, spec.h)?;
        let mut s = Session {
            id,
            spec,
            dataset,
            engine,
            scores: None,
            history: Vec::new(),
            created_ms: now_ms,
            updated_ms: now_ms,
        };
        s.rescore()?;
        Ok(s)
    }

    pub fn iteration(&self) -> usize {
        self.history.len()
    }

    pub fn exhausted(&self) -> bool {
        self.history.len() >= self.spec.budget || self.engine.labels().n_unlabeled() == 0
    }

    pub fn f(&self) -> &[f64] {
        self.engine.f().as_slice()
    }

    fn rescore(&mut self) -> Result<(), ApiError> {
        self.scores = if self.exhausted() {
            None
        } else {
            Some(self.engine.scores()?)
        };
        Ok(())
    }

    fn gone(&self) -> ApiError {
        ApiError::new(
            StatusCode::GONE,
            "exhausted",
            format!("session `{}` has no queries left", self.id),
        )
    }

    pub fn candidate_index(&self) -> Option<usize> {
        let s = self.scores.as_ref()?;
        s.best(self.engine.labels()).ok()
    }

    pub fn candidate_ref(&self) -> Option<PointRef> {
        self.candidate_index().map(|i| self.dataset.point_ref(i))
    }

    fn scored(&self, s: &Scores, i: usize) -> ScoredPoint {
        ScoredPoint {
            index: i,
            id: self.dataset.data.ids()[i].clone(),
            meta: self.dataset.data.meta().map(|m| m[i].clone()),
            f: s.f[i],
            im: s.im.as_ref().map(|im| im[i]),
            criterion: s.criterion[i],
        }
    }

    pub fn candidate(&self, k: usize) -> Result<Candidate, ApiError> {
        if k > MAX_TOP_K {
            return Err(ApiError::validation("k", format!("must be at most {MAX_TOP_K}")));
        }
        let s = self.scores.as_ref().ok_or_else(|| self.gone())?;
        let best = s.best(self.engine.labels()).map_err(|_| self.gone())?;
        let top_k = s
            .top_k(self.engine.labels(), k)
            .into_iter()
            .map(|i| self.scored(s, i))
            .collect();
        Ok(Candidate {
            session: self.id.clone(),
            iteration: self.iteration(),
            candidate: self.scored(s, best),
            top_k,
        })
    }

    /// Resolves the point named by a label request.
    pub fn resolve_point(&self, id: Option<&str>, index: Option<usize>) -> Result<usize, ApiError> {
        match (id, index) {
            (Some(id), None) => self.dataset.index_of(id).ok_or_else(|| ApiError::not_found("point", id)),
            (None, Some(i)) if i < self.dataset.data.n() => Ok(i),
            (None, Some(i)) => Err(ApiError::not_found("point index", &i.to_string())),
            (Some(id), Some(i)) => match self.dataset.index_of(id) {
                Some(j) if j == i => Ok(i),
                _ => Err(ApiError::validation("index", format!("does not match id `{id}`"))),
            },
            (None, None) => Err(ApiError::validation("id", "either id or index is required")),
        }
    }

    /// Every precondition of [`Session::apply_label`], checked without
    /// touching the engine.
    pub fn check_label(&self, index: usize) -> Result<(), ApiError> {
        if self.exhausted() {
            return Err(self.gone());
        }
        self.engine.labels().check_unlabeled(index)?;
        if !self.spec.free_label {
            let c = self.candidate_index().ok_or_else(|| self.gone())?;
            if c != index {
                return Err(ApiError::conflict(format!(
                    "point {index} is not the current candidate {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn apply_label(&mut self, index: usize, y: u8, now_ms: u64) -> Result<(), ApiError> {
        self.check_label(index)?;
        let f_at_query = self.engine.f()[index];
        let start = Instant::now();
        self.engine.update(index, y)?;
        self.history.push(HistoryEntry {
            iteration: self.history.len() + 1,
            index,
            id: self.dataset.data.ids()[index].clone(),
            label: y,
            f_at_query,
            seconds: 0.0,
            at_ms: now_ms,
        });
        // if rescoring fails the label stands and the next read retries
        let rescored = self.rescore();
        if let Some(h) = self.history.last_mut() {
            h.seconds = start.elapsed().as_secs_f64();
        }
        self.updated_ms = now_ms;
        rescored
    }

    pub fn positives_found(&self) -> usize {
        self.history.iter().filter(|h| h.label == 1).count()
    }

    pub fn metrics(&self) -> Metrics {
        let mut found = 0;
        let recall = self
            .history
            .iter()
            .map(|h| {
                found += usize::from(h.label);
                found
            })
            .collect();
        let ideal = self.dataset.data.labels().map(|labels| {
            let labels_known = |i: usize| self.spec.initial.iter().any(|&(j, _)| j == i);
            let avail = (0..labels.len()).filter(|&i| labels[i] == 1 && !labels_known(i)).count();
            (1..=self.history.len()).map(|t| t.min(avail)).collect()
        });
        Metrics {
            iteration: self.iteration(),
            budget: self.spec.budget,
            recall,
            ideal,
            latency_seconds: self.history.iter().map(|h| h.seconds).collect(),
            f_summary: self.f_summary(),
        }
    }

    fn f_summary(&self) -> FSummary {
        let f = self.engine.f();
        let vals: Vec<f64> = self.engine.labels().unlabeled().map(|i| f[i]).collect();
        if vals.is_empty() {
            return FSummary {
                count: 0,
                min: 0.0,
                max: 0.0,
                mean: 0.0,
                histogram: Vec::new(),
            };
        }
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let width = (max - min) / HISTOGRAM_BINS as f64;
        let mut histogram: Vec<Bin> = (0..HISTOGRAM_BINS)
            .map(|b| Bin {
                lo: min + width * b as f64,
                hi: if b + 1 == HISTOGRAM_BINS { max } else { min + width * (b + 1) as f64 },
                count: 0,
            })
            .collect();
        for v in &vals {
            let b = if width > 0.0 {
                (((v - min) / width) as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            histogram[b].count += 1;
        }
        FSummary {
            count: vals.len(),
            min,
            max,
            mean,
            histogram,
        }
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            id: self.id.clone(),
            dataset: self.spec.dataset.clone(),
            engine: self.spec.engine,
            h: self.spec.h,
            budget: self.spec.budget,
            seed: self.spec.seed,
            free_label: self.spec.free_label,
            iteration: self.iteration(),
            exhausted: self.exhausted(),
            initial: self.spec.initial.iter().map(|&(i, _)| self.dataset.point_ref(i)).collect(),
            history: self.history.clone(),
            created_ms: self.created_ms,
            updated_ms: self.updated_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HyperInput, InitialLabel};
    use actsearch_core::synthetic::uniform_labeled;

    fn registered() -> Arc<Registered> {
        Arc::new(Registered::new("u", uniform_labeled(4, 40, 0.2, 1)))
    }

    fn request(budget: usize) -> CreateSession {
        CreateSession {
            dataset: "u".into(),
            engine: None,
            h: HyperInput::default(),
            budget,
            seed: 0,
            initial: vec![InitialLabel { id: "0".into(), label: 1 }],
            random_start: false,
            free_label: false,
            idempotency_key: None,
        }
    }

    fn session(req: &CreateSession) -> Session {
        let ds = registered();
        let spec = SessionSpec::resolve(req, &ds).unwrap();
        Session::new("s".into(), spec, ds, 0).unwrap()
    }

    #[test]
    fn strict_mode_only_accepts_the_candidate() {
        let mut s = session(&request(5));
        let c = s.candidate_index().unwrap();
        let other = (1..40).find(|&i| i != c).unwrap();
        assert_eq!(s.apply_label(other, 0, 1).unwrap_err().status, StatusCode::CONFLICT);
        s.apply_label(c, 1, 1).unwrap();
        assert_eq!(s.iteration(), 1);
        assert_eq!(s.apply_label(c, 1, 2).unwrap_err().status, StatusCode::CONFLICT);
    }

    #[test]
    fn budget_exhausts_the_session() {
        let mut s = session(&request(2));
        for t in 0..2 {
            let c = s.candidate_index().unwrap();
            s.apply_label(c, 0, t).unwrap();
        }
        assert!(s.exhausted());
        assert_eq!(s.candidate(3).unwrap_err().status, StatusCode::GONE);
        assert_eq!(s.apply_label(5, 0, 3).unwrap_err().status, StatusCode::GONE);
    }

    #[test]
    fn histogram_counts_every_unlabeled_point() {
        let s = session(&request(2));
        let m = s.metrics();
        assert_eq!(m.f_summary.count, 39);
        assert_eq!(m.f_summary.histogram.iter().map(|b| b.count).sum::<usize>(), 39);
        assert!(m.recall.is_empty());
    }

    #[test]
    fn spec_validation_names_the_field() {
        let ds = registered();
        let mut req = request(3);
        req.h.lambda = Some(-1.0);
        assert_eq!(SessionSpec::resolve(&req, &ds).unwrap_err().body.field.as_deref(), Some("lambda"));
        let mut req = request(0);
        req.h.lambda = None;
        assert_eq!(SessionSpec::resolve(&req, &ds).unwrap_err().body.field.as_deref(), Some("budget"));
        let mut req = request(3);
        req.initial[0].label = 2;
        assert_eq!(SessionSpec::resolve(&req, &ds).unwrap_err().body.field.as_deref(), Some("label"));
        let mut req = request(3);
        req.engine = Some("nope".into());
        assert_eq!(SessionSpec::resolve(&req, &ds).unwrap_err().body.field.as_deref(), Some("engine"));
    }

    #[test]
    fn random_start_is_seeded() {
        let ds = registered();
        let mut req = request(3);
        req.initial.clear();
        req.random_start = true;
        let a = SessionSpec::resolve(&req, &ds).unwrap();
        let b = SessionSpec::resolve(&req, &ds).unwrap();
        assert_eq!(a.initial, b.initial);
        let (i, y) = a.initial[0];
        assert_eq!((ds.data.labels().unwrap()[i], y), (1, 1));
    }
}
