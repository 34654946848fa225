//! Request and response bodies.

use actsearch_core::{EngineKind, HyperParams};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

/// Hyperparameters with every field optional; missing ones take defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperInput {
    pub lambda: Option<f64>,
    pub w0: Option<f64>,
    pub pi: Option<f64>,
    pub alpha: Option<f64>,
}

impl HyperInput {
    pub fn resolve(&self) -> Result<HyperParams, ApiError> {
        let d = HyperParams::default();
        let h = HyperParams {
            lambda: self.lambda.unwrap_or(d.lambda),
            w0: self.w0.unwrap_or(d.w0),
            pi: self.pi.unwrap_or(d.pi),
            alpha: self.alpha.unwrap_or(d.alpha),
        };
        h.validate()?;
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialLabel {
    pub id: String,
    pub label: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub dataset: String,
    #[serde(default)]
    pub engine: Option<String>,
    #[serde(default)]
    pub h: HyperInput,
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// Labels known before the first query.
    #[serde(default)]
    pub initial: Vec<InitialLabel>,
    /// Start from one ground-truth positive drawn with `seed`, for
    /// simulated sessions on labeled datasets.
    #[serde(default)]
    pub random_start: bool,
    /// Accept labels for any unlabeled point, not just the candidate.
    #[serde(default)]
    pub free_label: bool,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRef {
    pub index: usize,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    /// False when an earlier request with the same idempotency key created
    /// the session.
    pub created: bool,
    pub candidate: Option<PointRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPoint {
    pub index: usize,
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<String>,
    pub f: f64,
    /// Rescaled impact factor; absent for engines without one or when
    /// `alpha = 0`.
    pub im: Option<f64>,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub session: String,
    pub iteration: usize,
    pub candidate: ScoredPoint,
    /// Best unlabeled points by criterion descending, ties by index.
    pub top_k: Vec<ScoredPoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateQuery {
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRequest {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub index: Option<usize>,
    pub label: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub iteration: usize,
    pub positives_found: usize,
    pub next_candidate: Option<PointRef>,
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub index: usize,
    pub id: String,
    pub label: u8,
    /// `f` of the point just before its label arrived.
    pub f_at_query: f64,
    pub seconds: f64,
    pub at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Distribution of `f` over the unlabeled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FSummary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub histogram: Vec<Bin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub iteration: usize,
    pub budget: usize,
    /// Cumulative positives after each label.
    pub recall: Vec<usize>,
    /// Best achievable `recall`, when the dataset carries ground truth.
    pub ideal: Option<Vec<usize>>,
    pub latency_seconds: Vec<f64>,
    pub f_summary: FSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub dataset: String,
    pub engine: EngineKind,
    pub h: HyperParams,
    pub budget: usize,
    pub seed: u64,
    pub free_label: bool,
    pub iteration: usize,
    pub exhausted: bool,
    pub initial: Vec<PointRef>,
    pub history: Vec<HistoryEntry>,
    pub created_ms: u64,
    pub updated_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub n: usize,
    pub r: usize,
    pub has_labels: bool,
}
