//! HTTP facade over the workflow, knowledge base, case collection and
//! evaluation harness. Core calls are blocking and run on the blocking
//! thread pool; evaluation runs are background jobs polled by id.
//!
//! Authentication is a single shared bearer token, which is enough for a
//! local workbench and nothing more.

pub mod error;
pub mod jobs;
mod routes;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::http::{header, HeaderValue, Method};
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;
use triz_core::cases::{load_collection, seed_cases, CaseCollection, CaseError};
use triz_core::gateway::Gateway;
use triz_core::workflow::{SessionStore, WorkflowError};

pub use error::{ApiError, ERROR_CODES};
pub use jobs::{Job, JobStatus};

/// The API description served at `/openapi.json`.
pub const OPENAPI: &str = include_str!("../openapi.json");

/// Every routed (method, path template) pair.
pub const ROUTES: [(&str, &str); 25] = [
    ("get", "/health"),
    ("get", "/openapi.json"),
    ("get", "/sessions"),
    ("post", "/sessions"),
    ("get", "/sessions/{id}"),
    ("post", "/sessions/{id}/step1"),
    ("post", "/sessions/{id}/step2"),
    ("post", "/sessions/{id}/step3"),
    ("post", "/sessions/{id}/relations/{index}"),
    ("post", "/sessions/{id}/principles"),
    ("post", "/sessions/{id}/step4"),
    ("get", "/knowledge/parameters"),
    ("get", "/knowledge/principles"),
    ("get", "/knowledge/matrix"),
    ("get", "/cases"),
    ("post", "/cases"),
    ("get", "/cases/{id}"),
    ("get", "/cases/{id}/projection"),
    ("post", "/cases/validate"),
    ("post", "/eval/contradiction"),
    ("post", "/eval/solution"),
    ("get", "/eval/jobs/{id}"),
    ("get", "/eval/reports"),
    ("get", "/eval/reports/{id}"),
    ("get", "/eval/reports/{id}/plots"),
];

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub store_dir: PathBuf,
    /// Case collection file; the bundled seed collection when absent.
    /// Cases posted to the API are written back to it.
    pub cases_path: Option<PathBuf>,
    /// Where finished reports are written and looked up.
    pub reports_dir: Option<PathBuf>,
    /// Required bearer token; `None` disables authentication.
    pub token: Option<String>,
    pub cors_origins: Vec<String>,
    /// Built web UI assets served for unmatched paths.
    pub static_dir: Option<PathBuf>,
    /// Evaluation jobs allowed to run at once.
    pub eval_workers: usize,
}

impl ServerConfig {
    pub fn new(store_dir: impl Into<PathBuf>) -> Self {
        Self { store_dir: store_dir.into(), cases_path: None, reports_dir: None, token: None, cors_origins: Vec::new(), static_dir: None, eval_workers: 2 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error(transparent)]
    Store(#[from] WorkflowError),
    #[error(transparent)]
    Cases(#[from] CaseError),
    #[error("invalid CORS origin {0:?}")]
    Origin(String),
}

pub struct AppState {
    pub gateway: Gateway,
    pub store: SessionStore,
    pub cases: RwLock<CaseCollection>,
    pub cases_path: Option<PathBuf>,
    pub jobs: Arc<jobs::Jobs>,
    token: Option<String>,
    session_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl AppState {
    pub fn new(config: &ServerConfig, gateway: Gateway) -> Result<Self, ServerError> {
        let cases = match &config.cases_path {
            Some(p) if p.exists() => load_collection(p)?,
            _ => seed_cases(),
        };
        Ok(Self {
            gateway,
            store: SessionStore::open(&config.store_dir)?,
            cases: RwLock::new(cases),
            cases_path: config.cases_path.clone(),
            jobs: Arc::new(jobs::Jobs::new(config.eval_workers, config.reports_dir.clone())),
            token: config.token.clone(),
            session_locks: Mutex::new(HashMap::new()),
        })
    }

    /// Serializes mutations of one session.
    fn session_lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.session_locks.lock().unwrap().entry(id.to_owned()).or_default().clone()
    }
}

pub fn app(config: &ServerConfig, gateway: Gateway) -> Result<Router, ServerError> {
    let state = Arc::new(AppState::new(config, gateway)?);
    let mut router = routes::router(state);
    if !config.cors_origins.is_empty() {
        let origins = config.cors_origins.iter().map(|o| HeaderValue::from_str(o).map_err(|_| ServerError::Origin(o.clone()))).collect::<Result<Vec<_>, _>>()?;
        router = router.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE]),
        );
    }
    if let Some(dir) = &config.static_dir {
        router = router.fallback_service(ServeDir::new(dir));
    }
    Ok(router)
}
