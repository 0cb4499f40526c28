#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::TimeZone;
use counterquill_core::clock::ManualClock;
use counterquill_core::corpus::Corpus;
use counterquill_core::events::MemorySink;
use counterquill_core::llm::{Gateway, MockProvider, Provider, RetryPolicy};
use counterquill_core::{Engine, EngineConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn fast_policy() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 3,
        initial_backoff: Duration::from_millis(1),
        deadline: Duration::from_secs(5),
    }
}

pub fn clock() -> Arc<ManualClock> {
    let start = chrono::Utc.with_ymd_and_hms(2024, 5, 1, 9, 0, 0).unwrap();
    Arc::new(ManualClock::new(start).with_step(chrono::Duration::seconds(1)))
}

pub fn gateway(provider: Arc<dyn Provider>) -> Gateway {
    Gateway::new(provider, fast_policy())
}

pub fn engine_with(provider: Arc<dyn Provider>) -> Arc<Engine> {
    Arc::new(Engine::new(
        Corpus::bundled(),
        gateway(provider),
        clock(),
        EngineConfig::default(),
        Box::new(MemorySink::default()),
    ))
}

pub fn mock_app() -> Router {
    counterquill_server::app(engine_with(Arc::new(MockProvider::new(1))), None)
}

pub struct Reply {
    pub status: StatusCode,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_owned()
    }
}

pub async fn send(app: &Router, method: Method, uri: &str, body: Option<Value>, token: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        text: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, None, None).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    send(app, Method::POST, uri, Some(body), None).await
}

pub async fn post_empty(app: &Router, uri: &str) -> Reply {
    send(app, Method::POST, uri, None, None).await
}

/// Creates a counterquill session on the jogging item and walks it to the highlight stage.
pub async fn cq_at_highlights(app: &Router, participant: &str) -> String {
    let r = post(
        app,
        "/sessions",
        json!({"participant_id": participant, "condition": "counterquill", "instance_id": "hs-03"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
    let id = r.json()["id"].as_str().unwrap().to_owned();
    assert_eq!(post_empty(app, &format!("/sessions/{id}/learning")).await.status, StatusCode::OK);
    let q = post(app, &format!("/sessions/{id}/quiz"), json!({"answers": ["C", "B", "D", "B"]})).await;
    assert_eq!(q.json()["n_correct"], 4);
    assert_eq!(post_empty(app, &format!("/sessions/{id}/highlight-practice")).await.status, StatusCode::OK);
    id
}

/// Continues to writing with exact highlights and both answers.
pub async fn cq_at_writing(app: &Router, participant: &str) -> String {
    let id = cq_at_highlights(app, participant).await;
    let h = post(
        app,
        &format!("/sessions/{id}/highlights"),
        json!({"identity": [{"start": 15, "end": 24}], "action": [{"start": 66, "end": 77}]}),
    )
    .await;
    assert_eq!(h.json()["advanced"], true, "{}", h.text);
    for (q, text) in [(1, "It casts a black man as a threat."), (2, "They would feel watched at home.")] {
        let r = post(app, &format!("/sessions/{id}/answers"), json!({"question": q, "text": text})).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    }
    assert_eq!(post_empty(app, &format!("/sessions/{id}/writing")).await.status, StatusCode::OK);
    id
}
