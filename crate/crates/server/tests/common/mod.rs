#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use triz_core::gateway::{BackendMode, FnBackend, Gateway, GatewayConfig};
use triz_server::{app, ServerConfig, OPENAPI};

pub fn replay_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/replay")
}

pub fn replay_gateway() -> Gateway {
    Gateway::open(&BackendMode::Replay(replay_dir()), GatewayConfig::default()).unwrap()
}

/// Answers every chat with a fixed line and embeds by hashing.
pub fn scripted_gateway() -> Gateway {
    Gateway::new(Box::new(FnBackend::new(|_| Ok("1. Weight: heavy".into()))), GatewayConfig { requests_per_minute: None, ..GatewayConfig::default() })
}

pub struct TestApp {
    pub router: Router,
    pub dir: tempfile::TempDir,
    pub token: Option<String>,
}

impl TestApp {
    pub fn new(gateway: Gateway) -> Self {
        Self::with(gateway, |_| {})
    }

    pub fn with(gateway: Gateway, tweak: impl FnOnce(&mut ServerConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ServerConfig::new(dir.path().join("sessions"));
        config.reports_dir = Some(dir.path().join("reports"));
        tweak(&mut config);
        let token = config.token.clone();
        Self { router: app(&config, gateway).unwrap(), dir, token }
    }

    pub async fn raw(&self, request: Request<Body>) -> (StatusCode, HeaderMap, Vec<u8>) {
        let response = self.router.clone().oneshot(request).await.unwrap();
        let (parts, body) = response.into_parts();
        (parts.status, parts.headers, body.collect().await.unwrap().to_bytes().to_vec())
    }

    /// Sends a JSON request, checks the reply against the documented
    /// response for `template` and returns it.
    pub async fn call(&self, method: &str, uri: &str, template: &str, body: Option<Value>) -> (StatusCode, Value) {
        let mut builder = Request::builder().method(Method::from_bytes(method.to_ascii_uppercase().as_bytes()).unwrap()).uri(uri);
        if let Some(t) = &self.token {
            builder = builder.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        let request = match body {
            Some(b) => builder.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())).unwrap(),
            None => builder.body(Body::empty()).unwrap(),
        };
        let (status, _, bytes) = self.raw(request).await;
        let value: Value = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{method} {uri}: body is not JSON ({e}): {}", String::from_utf8_lossy(&bytes)));
        conforms(method, template, status, &value);
        (status, value)
    }

    pub async fn get(&self, uri: &str, template: &str) -> (StatusCode, Value) {
        self.call("get", uri, template, None).await
    }

    pub async fn post(&self, uri: &str, template: &str, body: Value) -> (StatusCode, Value) {
        self.call("post", uri, template, Some(body)).await
    }

    /// Polls a job until it leaves the queue.
    pub async fn finish(&self, job_id: &str) -> Value {
        for _ in 0..600 {
            let (status, job) = self.get(&format!("/eval/jobs/{job_id}"), "/eval/jobs/{id}").await;
            assert_eq!(status, StatusCode::OK);
            if job["status"] == "succeeded" || job["status"] == "failed" {
                return job;
            }
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
        panic!("job {job_id} did not finish");
    }
}

pub fn openapi() -> &'static Value {
    static DOC: OnceLock<Value> = OnceLock::new();
    DOC.get_or_init(|| serde_json::from_str(OPENAPI).expect("openapi.json parses"))
}

/// The response schema documented for a status, with components attached
/// so internal references resolve.
pub fn response_schema(method: &str, template: &str, status: StatusCode) -> Option<Value> {
    let doc = openapi();
    let op = doc["paths"].get(template).and_then(|p| p.get(method)).unwrap_or_else(|| panic!("{method} {template} is not documented"));
    let mut response = op["responses"].get(status.as_str())?.clone();
    if let Some(r) = response.get("$ref").and_then(Value::as_str) {
        let name = r.rsplit('/').next().unwrap();
        response = doc["components"]["responses"][name].clone();
    }
    let mut schema = response["content"]["application/json"]["schema"].clone();
    schema.as_object_mut()?.insert("components".into(), doc["components"].clone());
    Some(schema)
}

pub fn conforms(method: &str, template: &str, status: StatusCode, value: &Value) {
    let schema = response_schema(method, template, status).unwrap_or_else(|| panic!("{method} {template} does not document status {status}: {value}"));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{method} {template} {status} does not match its schema:\n{}\n{value}", errors.join("\n"));
}

pub fn robot_problem() -> Value {
    let cases = triz_core::cases::seed_cases();
    serde_json::to_value(&cases.get("in-pipe-robot").unwrap().problem).unwrap()
}

pub async fn create_robot_session(app: &TestApp) -> String {
    let (status, body) = app.post("/sessions", "/sessions", json!({ "problem": robot_problem(), "model_id": "gpt-4" })).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_owned()
}
