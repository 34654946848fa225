//! Shared server state: registered datasets, live sessions and the log.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use actsearch_core::Dataset;
use parking_lot::{Mutex, RwLock};

use crate::error::{ApiError, ServiceError};
use crate::model::{CreateSession, Created, DatasetInfo, LabelRequest, LabelResponse};
use crate::session::{parse_label, Registered, Session, SessionSpec};
use crate::wal::{read_log, Record, Wal};

pub type SessionHandle = Arc<Mutex<Session>>;

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub struct AppState {
    datasets: BTreeMap<String, Arc<Registered>>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
    /// Idempotency key to session id. Held for the whole of a create so
    /// two requests with one key cannot both build a session.
    idempotency: Mutex<HashMap<String, String>>,
    wal: Mutex<Wal>,
}

impl AppState {
    /// Registers `datasets`, replays the log at `log` if given, and keeps
    /// appending to it.
    pub fn new(datasets: Vec<(String, Dataset)>, log: Option<&Path>) -> Result<Self, ServiceError> {
        let datasets = datasets
            .into_iter()
            .map(|(name, d)| (name.clone(), Arc::new(Registered::new(name, d))))
            .collect();
        let mut state = AppState {
            datasets,
            sessions: RwLock::new(HashMap::new()),
            idempotency: Mutex::new(HashMap::new()),
            wal: Mutex::new(Wal::disabled()),
        };
        if let Some(path) = log {
            let records = read_log(path)?;
            state.replay(&records)?;
            state.wal = Mutex::new(Wal::open(path)?);
            log::info!(
                "replayed {} records into {} sessions from {}",
                records.len(),
                state.sessions.read().len(),
                path.display()
            );
        }
        Ok(state)
    }

    fn replay(&mut self, records: &[Record]) -> Result<(), ServiceError> {
        for (k, rec) in records.iter().enumerate() {
            match rec {
                Record::Create { session, spec, at_ms } => {
                    let ds = self.datasets.get(&spec.dataset).cloned().ok_or_else(|| {
                        ServiceError::Replay {
                            line: k + 1,
                            msg: format!("unknown dataset `{}`", spec.dataset),
                        }
                    })?;
                    match Session::new(session.clone(), spec.clone(), ds, *at_ms) {
                        Ok(s) => {
                            if let Some(key) = &spec.idempotency_key {
                                self.idempotency.get_mut().insert(key.clone(), session.clone());
                            }
                            self.sessions
                                .get_mut()
                                .insert(session.clone(), Arc::new(Mutex::new(s)));
                        }
                        Err(e) => log::warn!("record {}: session not rebuilt: {}", k + 1, e.body.message),
                    }
                }
                Record::Label { session, index, label, at_ms } => {
                    let Some(s) = self.sessions.get_mut().get(session) else {
                        log::warn!("record {}: unknown session `{session}`", k + 1);
                        continue;
                    };
                    if let Err(e) = s.lock().apply_label(*index, *label, *at_ms) {
                        log::warn!("record {}: label skipped: {}", k + 1, e.body.message);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn datasets(&self) -> Vec<DatasetInfo> {
        self.datasets
            .values()
            .map(|r| DatasetInfo {
                name: r.name.clone(),
                n: r.data.n(),
                r: r.data.r(),
                has_labels: r.data.labels().is_some(),
            })
            .collect()
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    pub fn create(&self, req: &CreateSession) -> Result<Created, ApiError> {
        let ds = self
            .datasets
            .get(&req.dataset)
            .cloned()
            .ok_or_else(|| ApiError::validation("dataset", format!("unknown dataset `{}`", req.dataset)))?;
        let spec = SessionSpec::resolve(req, &ds)?;
        let mut keys = self.idempotency.lock();
        if let Some(key) = &spec.idempotency_key {
            if let Some(id) = keys.get(key) {
                let handle = self.session(id)?;
                let s = handle.lock();
                if s.spec != spec {
                    return Err(ApiError::conflict(format!(
                        "idempotency key `{key}` was used for a different request"
                    )));
                }
                return Ok(Created {
                    id: id.clone(),
                    created: false,
                    candidate: s.candidate_ref(),
                });
            }
        }
        let id = uuid::Uuid::new_v4().to_string();
        let at_ms = now_ms();
        let session = Session::new(id.clone(), spec.clone(), ds, at_ms)?;
        self.wal
            .lock()
            .append(&Record::Create {
                session: id.clone(),
                spec: spec.clone(),
                at_ms,
            })
            .map_err(|e| ApiError::internal(format!("session log: {e}")))?;
        let candidate = session.candidate_ref();
        self.sessions.write().insert(id.clone(), Arc::new(Mutex::new(session)));
        if let Some(key) = spec.idempotency_key {
            keys.insert(key, id.clone());
        }
        Ok(Created {
            id,
            created: true,
            candidate,
        })
    }

    /// Validates, logs and applies one label. The session lock is held
    /// throughout, so concurrent submissions are applied one at a time in
    /// log order.
    pub fn label(&self, id: &str, req: &LabelRequest) -> Result<LabelResponse, ApiError> {
        let handle = self.session(id)?;
        let mut s = handle.lock();
        let y = parse_label(req.label)?;
        let index = s.resolve_point(req.id.as_deref(), req.index)?;
        s.check_label(index)?;
        let at_ms = now_ms();
        self.wal
            .lock()
            .append(&Record::Label {
                session: id.to_string(),
                index,
                label: y,
                at_ms,
            })
            .map_err(|e| ApiError::internal(format!("session log: {e}")))?;
        s.apply_label(index, y, at_ms)?;
        Ok(LabelResponse {
            iteration: s.iteration(),
            positives_found: s.positives_found(),
            next_candidate: s.candidate_ref(),
            exhausted: s.exhausted(),
        })
    }
}
