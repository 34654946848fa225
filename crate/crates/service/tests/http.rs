use std::sync::Arc;

use actsearch_core::synthetic::{uniform_labeled, TwoGaussians};
use actsearch_core::Dataset;
use actsearch_service::model::{Candidate, Created, LabelResponse, Metrics, SessionView};
use actsearch_service::{router, AppState, ErrorBody};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn datasets() -> Vec<(String, Dataset)> {
    vec![
        ("u".into(), uniform_labeled(5, 80, 0.2, 7)),
        ("g".into(), TwoGaussians::new(300, 6, 0.1, 2).surrogate().unwrap()),
    ]
}

fn app(state: AppState) -> Router {
    router(Arc::new(state))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, v)
}

async fn create(app: &Router, body: Value) -> Created {
    let (s, v) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    serde_json::from_value(v).unwrap()
}

fn truth(name: &str) -> Vec<u8> {
    datasets()
        .into_iter()
        .find(|(n, _)| n == name)
        .unwrap()
        .1
        .labels()
        .unwrap()
        .to_vec()
}

/// Labels every candidate with ground truth until the budget runs out.
async fn drive(app: &Router, id: &str, labels: &[u8]) -> Vec<usize> {
    let mut queried = Vec::new();
    loop {
        let (s, v) = call(app, "GET", &format!("/sessions/{id}/candidate?k=3"), None).await;
        if s == StatusCode::GONE {
            return queried;
        }
        assert_eq!(s, StatusCode::OK, "{v}");
        let c: Candidate = serde_json::from_value(v).unwrap();
        let i = c.candidate.index;
        let (s, v) = call(
            app,
            "POST",
            &format!("/sessions/{id}/labels"),
            Some(json!({ "index": i, "label": labels[i] })),
        )
        .await;
        assert_eq!(s, StatusCode::OK, "{v}");
        queried.push(i);
    }
}

#[tokio::test]
async fn full_session_reports_recall() {
    let app = app(AppState::new(datasets(), None).unwrap());
    let labels = truth("g");
    let start = labels.iter().position(|&y| y == 1).unwrap();
    let c = create(
        &app,
        json!({ "dataset": "g", "budget": 10, "initial": [{ "id": start.to_string(), "label": 1 }] }),
    )
    .await;
    assert!(c.created);
    let queried = drive(&app, &c.id, &labels).await;
    assert_eq!(queried.len(), 10);
    let expect: usize = queried.iter().map(|&i| labels[i] as usize).sum();

    let (s, v) = call(&app, "GET", &format!("/sessions/{}/metrics", c.id), None).await;
    assert_eq!(s, StatusCode::OK);
    let m: Metrics = serde_json::from_value(v).unwrap();
    assert_eq!(m.recall.len(), 10);
    assert_eq!(m.recall[9], expect);
    assert!(m.latency_seconds.iter().all(|&t| t > 0.0));
    assert_eq!(m.ideal.unwrap()[9], 10);
    assert_eq!(m.f_summary.count, 300 - 11);

    let (_, v) = call(&app, "GET", &format!("/sessions/{}", c.id), None).await;
    let view: SessionView = serde_json::from_value(v).unwrap();
    assert!(view.exhausted);
    assert_eq!(view.history.iter().map(|h| h.index).collect::<Vec<_>>(), queried);
}

#[tokio::test]
async fn recall_counts_submitted_positives() {
    let app = app(AppState::new(datasets(), None).unwrap());
    let c = create(&app, json!({ "dataset": "u", "budget": 10, "free_label": true })).await;
    for k in 0..10 {
        let (s, v) = call(
            &app,
            "POST",
            &format!("/sessions/{}/labels", c.id),
            Some(json!({ "id": k.to_string(), "label": i64::from(k % 5 < 2) })),
        )
        .await;
        assert_eq!(s, StatusCode::OK, "{v}");
    }
    let (_, v) = call(&app, "GET", &format!("/sessions/{}/metrics", c.id), None).await;
    let m: Metrics = serde_json::from_value(v).unwrap();
    assert_eq!(m.recall[9], 4);
    assert_eq!(m.recall, vec![1, 2, 2, 2, 2, 3, 4, 4, 4, 4]);
}

#[tokio::test]
async fn validation_errors_name_the_field() {
    let app = app(AppState::new(datasets(), None).unwrap());
    let (s, v) = call(&app, "POST", "/sessions", Some(json!({ "dataset": "u", "budget": 5, "h": { "lambda": -1.0 } }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let e: ErrorBody = serde_json::from_value(v).unwrap();
    assert_eq!(e.field.as_deref(), Some("lambda"));

    let (s, v) = call(&app, "POST", "/sessions", Some(json!({ "dataset": "nope", "budget": 5 }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["field"], "dataset");

    let (s, v) = call(&app, "POST", "/sessions", Some(json!({ "dataset": "u" }))).await;
    assert!(s.is_client_error());
    assert!(v["message"].as_str().unwrap().contains("budget"), "{v}");

    let c = create(&app, json!({ "dataset": "u", "budget": 5 })).await;
    let i = c.candidate.unwrap().index;
    let (s, v) = call(&app, "POST", &format!("/sessions/{}/labels", c.id), Some(json!({ "index": i, "label": 2 }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["field"], "label");

    let (s, _) = call(&app, "POST", &format!("/sessions/{}/labels", c.id), Some(json!({ "id": "zzz", "label": 1 }))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/sessions/missing/candidate", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, v) = call(&app, "GET", &format!("/sessions/{}/candidate?k=5000", c.id), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["field"], "k");
}

#[tokio::test]
async fn strict_mode_and_relabeling_conflict() {
    let app = app(AppState::new(datasets(), None).unwrap());
    let c = create(&app, json!({ "dataset": "u", "budget": 5, "initial": [{ "id": "3", "label": 1 }] })).await;
    let cand = c.candidate.unwrap().index;
    let other = (0..80).find(|&i| i != cand && i != 3).unwrap();
    let uri = format!("/sessions/{}/labels", c.id);
    let (s, _) = call(&app, "POST", &uri, Some(json!({ "index": other, "label": 0 }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, "POST", &uri, Some(json!({ "index": 3, "label": 0 }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, v) = call(&app, "POST", &uri, Some(json!({ "index": cand, "label": 0 }))).await;
    assert_eq!(s, StatusCode::OK);
    let r: LabelResponse = serde_json::from_value(v).unwrap();
    assert_eq!(r.iteration, 1);
    assert_ne!(r.next_candidate.unwrap().index, cand);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions_of_one_candidate_apply_once() {
    let app = app(AppState::new(datasets(), None).unwrap());
    let c = create(&app, json!({ "dataset": "g", "budget": 20 })).await;
    let cand = c.candidate.unwrap().index;
    let uri = format!("/sessions/{}/labels", c.id);
    let tasks: Vec<_> = (0..8)
        .map(|k| {
            let app = app.clone();
            let uri = uri.clone();
            tokio::spawn(async move {
                call(&app, "POST", &uri, Some(json!({ "index": cand, "label": k % 2 }))).await.0
            })
        })
        .collect();
    let mut ok = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => {}
            other => panic!("unexpected status {other}"),
        }
    }
    assert_eq!(ok, 1);
    let (_, v) = call(&app, "GET", &format!("/sessions/{}", c.id), None).await;
    let view: SessionView = serde_json::from_value(v).unwrap();
    assert_eq!(view.history.len(), 1);
}

#[tokio::test]
async fn idempotency_key_returns_the_same_session() {
    let app = app(AppState::new(datasets(), None).unwrap());
    let body = json!({ "dataset": "u", "budget": 5, "idempotency_key": "abc" });
    let first = create(&app, body.clone()).await;
    let (s, v) = call(&app, "POST", "/sessions", Some(body)).await;
    assert_eq!(s, StatusCode::OK);
    let second: Created = serde_json::from_value(v).unwrap();
    assert_eq!(second.id, first.id);
    assert!(!second.created);
    let (s, _) = call(&app, "POST", "/sessions", Some(json!({ "dataset": "u", "budget": 6, "idempotency_key": "abc" }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (_, v) = call(&app, "GET", "/sessions", None).await;
    assert_eq!(v.as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn replaying_the_log_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sessions.jsonl");
    let labels = truth("g");
    let (id_las, id_wnas, before) = {
        let app = app(AppState::new(datasets(), Some(&log)).unwrap());
        let a = create(&app, json!({ "dataset": "g", "budget": 12, "random_start": true, "seed": 4 })).await;
        let b = create(&app, json!({ "dataset": "g", "engine": "wnas", "budget": 6, "random_start": true })).await;
        drive(&app, &a.id, &labels).await;
        let half = drive(&app, &b.id, &labels).await;
        assert_eq!(half.len(), 6);
        let mut before = Vec::new();
        for id in [&a.id, &b.id] {
            let (_, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
            before.push(serde_json::from_value::<SessionView>(v).unwrap());
        }
        (a.id, b.id, before)
    };
    let state = AppState::new(datasets(), Some(&log)).unwrap();
    for (id, view) in [&id_las, &id_wnas].into_iter().zip(&before) {
        let h = state.session(id).unwrap();
        let s = h.lock();
        let after = s.view();
        assert_eq!(after.iteration, view.iteration);
        assert_eq!(after.initial, view.initial);
        for (x, y) in after.history.iter().zip(&view.history) {
            assert_eq!((x.index, x.label, x.at_ms), (y.index, y.label, y.at_ms));
            assert!((x.f_at_query - y.f_at_query).abs() <= 1e-12);
        }
    }
    let app2 = app(state);
    let (_, v) = call(&app2, "GET", &format!("/sessions/{id_las}/metrics"), None).await;
    let m: Metrics = serde_json::from_value(v).unwrap();
    assert_eq!(m.recall.len(), 12);
}

#[tokio::test]
async fn candidate_exposes_scores() {
    let app = app(AppState::new(datasets(), None).unwrap());
    let c = create(&app, json!({ "dataset": "u", "budget": 5, "initial": [{ "id": "0", "label": 1 }] })).await;
    let (s, v) = call(&app, "GET", &format!("/sessions/{}/candidate?k=4", c.id), None).await;
    assert_eq!(s, StatusCode::OK);
    let cand: Candidate = serde_json::from_value(v).unwrap();
    assert_eq!(cand.top_k.len(), 4);
    assert_eq!(cand.top_k[0], cand.candidate);
    assert!(cand.candidate.im.is_some());
    assert!(cand.top_k.windows(2).all(|w| w[0].criterion >= w[1].criterion));

    let w = create(&app, json!({ "dataset": "u", "engine": "wnas", "budget": 5, "initial": [{ "id": "0", "label": 1 }] })).await;
    let (_, v) = call(&app, "GET", &format!("/sessions/{}/candidate", w.id), None).await;
    assert!(v["candidate"]["im"].is_null());
    let (_, v) = call(&app, "GET", "/datasets", None).await;
    assert_eq!(v.as_array().unwrap().len(), 2);
}
