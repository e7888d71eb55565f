use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::Serialize;
use serde_json::{Map, Value};
use triz_core::cases::CaseError;
use triz_core::eval::EvalError;
use triz_core::gateway::GatewayError;
use triz_core::knowledge::KnowledgeError;
use triz_core::workflow::WorkflowError;

/// Every `code` an error body can carry, with its HTTP status.
pub const ERROR_CODES: [(&str, u16); 8] = [
    ("invalid_input", 400),
    ("unauthorized", 401),
    ("not_found", 404),
    ("invalid_state", 409),
    ("stale_version", 409),
    ("empty_result", 422),
    ("upstream_llm_error", 502),
    ("internal", 500),
];

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Map<String, Value>>,
}

impl ApiError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        let status = ERROR_CODES.iter().find(|(c, _)| *c == code).map(|(_, s)| StatusCode::from_u16(*s).unwrap()).expect("documented error code");
        Self { status, code, message: message.into(), details: None }
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.get_or_insert_with(Map::new).insert(key.to_owned(), value.into());
        self
    }

    pub fn invalid_input(message: impl Into<String>) -> Self {
        Self::new("invalid_input", message)
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new("not_found", format!("{} not found", what.into()))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new("internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            log::error!("{}: {}", self.code, self.message);
        }
        (self.status, axum::Json(&self)).into_response()
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        let message = e.to_string();
        match e {
            WorkflowError::InvalidState { op, state, allowed } => {
                Self::new("invalid_state", message).with_detail("operation", op).with_detail("state", state.to_string()).with_detail("allowed", allowed)
            }
            WorkflowError::StaleVersion { expected, found } => Self::new("stale_version", message).with_detail("expected", expected).with_detail("found", found),
            WorkflowError::InvalidInput(_) | WorkflowError::IncompleteRelation(_) => Self::invalid_input(message),
            WorkflowError::EmptyResult(_) => Self::new("empty_result", message),
            WorkflowError::NotFound(_) => Self::new("not_found", message),
            WorkflowError::Gateway(g) => g.into(),
            WorkflowError::Prompt(_) | WorkflowError::Io { .. } | WorkflowError::Corrupt { .. } => Self::internal(message),
        }
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::InvalidRequest(_) => Self::invalid_input(e.to_string()),
            _ => Self::new("upstream_llm_error", e.to_string()),
        }
    }
}

impl From<KnowledgeError> for ApiError {
    fn from(e: KnowledgeError) -> Self {
        match e {
            KnowledgeError::OutOfRange { .. } | KnowledgeError::Ambiguous { .. } | KnowledgeError::EmptyName => Self::invalid_input(e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

impl From<CaseError> for ApiError {
    fn from(e: CaseError) -> Self {
        match e {
            CaseError::Invalid(findings) => {
                let list = serde_json::to_value(&findings).unwrap_or_default();
                Self::invalid_input(format!("{} validation finding(s)", findings.len())).with_detail("findings", list)
            }
            CaseError::Parse { .. } => Self::invalid_input(e.to_string()),
            CaseError::Io { .. } => Self::internal(e.to_string()),
        }
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Gateway(g) => g.into(),
            EvalError::NothingScored(_) => Self::new("empty_result", e.to_string()),
            EvalError::UndefinedMetric(_) | EvalError::Shape { .. } | EvalError::InvalidPair(..) | EvalError::Precondition(_) => Self::invalid_input(e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::invalid_input(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::invalid_input(e.body_text())
    }
}

impl From<tokio::task::JoinError> for ApiError {
    fn from(e: tokio::task::JoinError) -> Self {
        Self::internal(format!("worker failed: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use triz_core::workflow::SessionState;

    #[test]
    fn every_code_has_a_status() {
        for (code, status) in ERROR_CODES {
            assert_eq!(ApiError::new(code, "x").status.as_u16(), status);
        }
    }

    #[test]
    fn workflow_errors_map_to_codes_and_details() {
        let e: ApiError = WorkflowError::StaleVersion { expected: 3, found: 4 }.into();
        assert_eq!((e.code, e.status), ("stale_version", StatusCode::CONFLICT));
        assert_eq!(serde_json::to_value(&e).unwrap(), serde_json::json!({ "code": "stale_version", "message": e.message, "details": { "expected": 3, "found": 4 } }));
        let e: ApiError = WorkflowError::InvalidState { op: "run_step3", state: SessionState::ProblemEntered, allowed: "parameters_mapped".into() }.into();
        assert_eq!(e.code, "invalid_state");
        assert_eq!(e.details.unwrap()["state"], "problem_entered");
        let e: ApiError = WorkflowError::EmptyResult("parameters").into();
        assert_eq!(e.status, StatusCode::UNPROCESSABLE_ENTITY);
        let e: ApiError = EvalError::NothingScored("x".into()).into();
        assert_eq!(e.code, "empty_result");
        let e: ApiError = GatewayError::MissingApiKey("K".into()).into();
        assert_eq!(e.status, StatusCode::BAD_GATEWAY);
    }
}
