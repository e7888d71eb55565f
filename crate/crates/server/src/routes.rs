use std::sync::Arc;

use axum::extract::{FromRequest, FromRequestParts, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use triz_core::cases::{save_collection, validate_case, validate_collection, Case, CaseCollection, CaseFinding, ProblemDescription};
use triz_core::eval::plot::{report_plot_data, PlotData};
use triz_core::eval::project::{project_keywords, GatewayPhrases, KeywordProjection, ProjectionMethod, UmapParams};
use triz_core::eval::{run_contradiction_eval, run_solution_eval, Aggregation, ContradictionEvalOptions, EvalKind, EvalReport, MatchMode, SolutionEvalOptions};
use triz_core::gateway::RequestTag;
use triz_core::knowledge::{EngineeringParameter, InventivePrinciple, KnowledgeBase};
use triz_core::prompts::PromptStrategy;
use triz_core::workflow::store::SessionSummary;
use triz_core::workflow::{ContradictionRelation, ProblemParameter, Session, SessionState, Step4Outcome, TrizMapping, Workflow, WorkflowError, DEFAULT_SOLUTION_COUNT};

use crate::error::ApiError;
use crate::jobs::Job;
use crate::{AppState, OPENAPI};

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

/// JSON body whose rejections are reported as `invalid_input`.
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
struct Body<T>(T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
struct Query<T>(T);

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/step1", post(step1))
        .route("/sessions/{id}/step2", post(step2))
        .route("/sessions/{id}/step3", post(step3))
        .route("/sessions/{id}/relations/{index}", post(amend))
        .route("/sessions/{id}/principles", post(principles))
        .route("/sessions/{id}/step4", post(step4))
        .route("/knowledge/parameters", get(parameters))
        .route("/knowledge/principles", get(principle_list))
        .route("/knowledge/matrix", get(matrix))
        .route("/cases", get(list_cases).post(put_case))
        .route("/cases/validate", post(validate))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/projection", get(projection))
        .route("/eval/contradiction", post(eval_contradiction))
        .route("/eval/solution", post(eval_solution))
        .route("/eval/jobs/{id}", get(get_job))
        .route("/eval/reports", get(list_reports))
        .route("/eval/reports/{id}", get(get_report))
        .route("/eval/reports/{id}/plots", get(report_plots))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token))
        .route("/health", get(|| async { Json(serde_json::json!({ "status": "ok" })) }))
        .route("/openapi.json", get(|| async { ([(header::CONTENT_TYPE, "application/json")], OPENAPI) }))
        .fallback(|| async { ApiError::not_found("route") })
        .with_state(state)
}

async fn require_token(State(state): State<Shared>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let given = request.headers().get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError::new("unauthorized", "missing or wrong bearer token").into_response();
        }
    }
    next.run(request).await
}

async fn blocking<T: Send + 'static>(state: &Shared, f: impl FnOnce(&AppState) -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    let state = state.clone();
    tokio::task::spawn_blocking(move || f(&state)).await?
}

// sessions

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    problem: ProblemDescription,
    model_id: Option<String>,
}

#[derive(Serialize)]
struct SessionRef {
    id: String,
    state: SessionState,
    version: u64,
}

#[derive(Serialize)]
struct StepResponse<T> {
    id: String,
    state: SessionState,
    version: u64,
    output: T,
}

async fn create_session(State(state): State<Shared>, Body(req): Body<CreateSession>) -> ApiResult<(StatusCode, Json<SessionRef>)> {
    blocking(&state, move |st| {
        let model = req.model_id.unwrap_or_else(|| st.gateway.config().chat_model.clone());
        let s = st.store.create(Session::new(req.problem, &model)?)?;
        Ok((StatusCode::CREATED, Json(SessionRef { id: s.id, state: s.state, version: s.version })))
    })
    .await
}

async fn list_sessions(State(state): State<Shared>) -> ApiResult<Json<Vec<SessionSummary>>> {
    blocking(&state, |st| Ok(Json(st.store.list()?))).await
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    blocking(&state, move |st| Ok(Json(st.store.load(&id)?))).await
}

/// Loads the session, checks the caller's version, applies `op` and saves.
async fn mutate<T: Send + 'static>(
    state: &Shared,
    id: String,
    version: u64,
    op: impl FnOnce(&Workflow, &mut Session) -> Result<T, WorkflowError> + Send + 'static,
) -> ApiResult<Json<StepResponse<T>>> {
    blocking(state, move |st| {
        let lock = st.session_lock(&id);
        let _guard = lock.lock().unwrap();
        let mut s = st.store.load(&id)?;
        if s.version != version {
            return Err(WorkflowError::StaleVersion { expected: version, found: s.version }.into());
        }
        let out = Workflow::new(&st.gateway).apply(&mut s, op)?;
        let s = st.store.save(&s)?;
        Ok(Json(StepResponse { id: s.id, state: s.state, version: s.version, output: out }))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step1Request {
    version: u64,
}

async fn step1(State(state): State<Shared>, Path(id): Path<String>, Body(req): Body<Step1Request>) -> ApiResult<Json<StepResponse<Vec<ProblemParameter>>>> {
    mutate(&state, id, req.version, |wf, s| wf.run_step1(s)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step2Request {
    version: u64,
    selected: Vec<u32>,
}

async fn step2(State(state): State<Shared>, Path(id): Path<String>, Body(req): Body<Step2Request>) -> ApiResult<Json<StepResponse<Vec<TrizMapping>>>> {
    mutate(&state, id, req.version, move |wf, s| wf.run_step2(s, &req.selected)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step3Request {
    version: u64,
    triz_parameters: Vec<u8>,
    strategy: Option<PromptStrategy>,
}

async fn step3(State(state): State<Shared>, Path(id): Path<String>, Body(req): Body<Step3Request>) -> ApiResult<Json<StepResponse<Vec<ContradictionRelation>>>> {
    mutate(&state, id, req.version, move |wf, s| wf.run_step3(s, &req.triz_parameters, req.strategy)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AmendRequest {
    version: u64,
    improving: u8,
    worsening: u8,
}

async fn amend(State(state): State<Shared>, Path((id, index)): Path<(String, usize)>, Body(req): Body<AmendRequest>) -> ApiResult<Json<StepResponse<ContradictionRelation>>> {
    mutate(&state, id, req.version, move |wf, s| wf.amend_relation(s, index, req.improving, req.worsening)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrinciplesRequest {
    version: u64,
    contradiction: usize,
    /// Omitted: only look up the recommendation.
    principles: Option<Vec<u8>>,
}

#[derive(Serialize)]
struct PrinciplesOutput {
    contradiction: Option<ContradictionRelation>,
    recommended: Vec<u8>,
    selected: Vec<u8>,
}

async fn principles(State(state): State<Shared>, Path(id): Path<String>, Body(req): Body<PrinciplesRequest>) -> ApiResult<Json<StepResponse<PrinciplesOutput>>> {
    mutate(&state, id, req.version, move |wf, s| {
        let recommended = wf.recommend_principles(s, req.contradiction)?;
        if let Some(p) = &req.principles {
            wf.confirm_principles(s, p)?;
        }
        Ok(PrinciplesOutput { contradiction: s.selected_contradiction.clone(), recommended, selected: s.selected_principles.clone() })
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step4Request {
    version: u64,
    principle: u8,
    strategy: Option<PromptStrategy>,
    count: Option<u32>,
}

async fn step4(State(state): State<Shared>, Path(id): Path<String>, Body(req): Body<Step4Request>) -> ApiResult<Json<StepResponse<Step4Outcome>>> {
    mutate(&state, id, req.version, move |wf, s| wf.run_step4(s, req.principle, req.strategy, req.count.unwrap_or(DEFAULT_SOLUTION_COUNT))).await
}

// knowledge

#[derive(Deserialize)]
struct Search {
    q: Option<String>,
}

async fn parameters(Query(search): Query<Search>) -> ApiResult<Json<Vec<EngineeringParameter>>> {
    let kb = KnowledgeBase::bundled();
    Ok(Json(match search.q {
        None => kb.parameters().to_vec(),
        Some(q) => kb.parameter_by_name(&q, true)?.into_iter().cloned().collect(),
    }))
}

async fn principle_list(Query(search): Query<Search>) -> Json<Vec<InventivePrinciple>> {
    let kb = KnowledgeBase::bundled();
    let q = search.q.map(|q| q.trim().to_lowercase()).unwrap_or_default();
    Json(kb.principles().iter().filter(|p| p.name.to_lowercase().contains(&q)).cloned().collect())
}

#[derive(Deserialize)]
struct MatrixQuery {
    improving: i64,
    worsening: i64,
}

#[derive(Serialize)]
struct MatrixCell {
    improving: EngineeringParameter,
    worsening: EngineeringParameter,
    principles: Vec<InventivePrinciple>,
}

async fn matrix(Query(q): Query<MatrixQuery>) -> ApiResult<Json<MatrixCell>> {
    let kb = KnowledgeBase::bundled();
    let principles = kb.matrix_lookup(q.improving, q.worsening)?.into_iter().cloned().collect();
    Ok(Json(MatrixCell { improving: kb.parameter_by_number(q.improving)?.clone(), worsening: kb.parameter_by_number(q.worsening)?.clone(), principles }))
}

// cases

async fn list_cases(State(state): State<Shared>) -> Json<CaseCollection> {
    Json(state.cases.read().unwrap().clone())
}

async fn get_case(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Case>> {
    state.cases.read().unwrap().get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("case {id}")))
}

/// Adds a case or replaces the one with the same id.
async fn put_case(State(state): State<Shared>, Body(case): Body<Case>) -> ApiResult<(StatusCode, Json<Case>)> {
    blocking(&state, move |st| {
        let findings = validate_case(&case);
        if !findings.is_empty() {
            return Err(triz_core::cases::CaseError::Invalid(findings).into());
        }
        let mut cases = st.cases.write().unwrap();
        let mut next = cases.clone();
        let status = match next.cases.iter_mut().find(|c| c.id == case.id) {
            Some(slot) => {
                *slot = case.clone();
                StatusCode::OK
            }
            None => {
                next.cases.push(case.clone());
                StatusCode::CREATED
            }
        };
        let findings = validate_collection(&next);
        if !findings.is_empty() {
            return Err(triz_core::cases::CaseError::Invalid(findings).into());
        }
        if let Some(path) = &st.cases_path {
            save_collection(&next, path)?;
        }
        *cases = next;
        Ok((status, Json(case)))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateRequest {
    case: Option<Case>,
    collection: Option<CaseCollection>,
}

#[derive(Serialize)]
struct ValidateResponse {
    valid: bool,
    findings: Vec<CaseFinding>,
}

async fn validate(Body(req): Body<ValidateRequest>) -> ApiResult<Json<ValidateResponse>> {
    let findings = match (req.case, req.collection) {
        (Some(c), None) => validate_case(&c),
        (None, Some(c)) => validate_collection(&c),
        _ => return Err(ApiError::invalid_input("give exactly one of `case` or `collection`")),
    };
    Ok(Json(ValidateResponse { valid: findings.is_empty(), findings }))
}

#[derive(Deserialize)]
struct ProjectionQuery {
    method: Option<ProjectionMethod>,
}

async fn projection(State(state): State<Shared>, Path(id): Path<String>, Query(q): Query<ProjectionQuery>) -> ApiResult<Json<KeywordProjection>> {
    let case = state.cases.read().unwrap().get(&id).cloned().ok_or_else(|| ApiError::not_found(format!("case {id}")))?;
    blocking(&state, move |st| {
        let tag = RequestTag { session: format!("keywords-{}", case.id), model: st.gateway.config().embedding_model.clone(), ..RequestTag::default() };
        let embedder = GatewayPhrases { gateway: &st.gateway, tag };
        Ok(Json(project_keywords(&case.solution_keywords, &embedder, q.method.unwrap_or_default(), &UmapParams::default())?))
    })
    .await
}

// evaluation

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ContradictionJob {
    strategies: Option<Vec<PromptStrategy>>,
    models: Option<Vec<String>>,
    match_mode: Option<MatchMode>,
    aggregation: Option<Aggregation>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolutionJob {
    strategies: Option<Vec<PromptStrategy>>,
    models: Option<Vec<String>>,
    per_principle_count: Option<u32>,
    aggregation: Option<Aggregation>,
}

fn check_lists(strategies: &[PromptStrategy], models: &[String]) -> ApiResult<()> {
    if strategies.is_empty() || models.is_empty() || models.iter().any(|m| m.trim().is_empty()) {
        return Err(ApiError::invalid_input("strategies and models must be non-empty"));
    }
    Ok(())
}

async fn eval_contradiction(State(state): State<Shared>, Body(req): Body<ContradictionJob>) -> ApiResult<(StatusCode, Json<Job>)> {
    let d = ContradictionEvalOptions::default();
    let opts = ContradictionEvalOptions {
        strategies: req.strategies.unwrap_or(d.strategies),
        models: req.models.unwrap_or(d.models),
        mode: req.match_mode.unwrap_or(d.mode),
        aggregation: req.aggregation.unwrap_or(d.aggregation),
    };
    check_lists(&opts.strategies, &opts.models)?;
    let st = state.clone();
    let job = state.jobs.submit(EvalKind::Contradiction, move || {
        let cases = st.cases.read().unwrap().clone();
        Ok(run_contradiction_eval(&Workflow::new(&st.gateway), &cases, &opts)?)
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn eval_solution(State(state): State<Shared>, Body(req): Body<SolutionJob>) -> ApiResult<(StatusCode, Json<Job>)> {
    let d = SolutionEvalOptions::default();
    let opts = SolutionEvalOptions {
        strategies: req.strategies.unwrap_or(d.strategies),
        models: req.models.unwrap_or(d.models),
        per_principle_count: req.per_principle_count.unwrap_or(d.per_principle_count),
        aggregation: req.aggregation.unwrap_or(d.aggregation),
    };
    check_lists(&opts.strategies, &opts.models)?;
    if opts.per_principle_count == 0 {
        return Err(ApiError::invalid_input("per_principle_count must be at least 1"));
    }
    let st = state.clone();
    let job = state.jobs.submit(EvalKind::Solution, move || {
        let cases = st.cases.read().unwrap().clone();
        Ok(run_solution_eval(&Workflow::new(&st.gateway), &cases, &opts)?)
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn get_job(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Job>> {
    state.jobs.get(&id).map(Json).ok_or_else(|| ApiError::not_found(format!("job {id}")))
}

async fn list_reports(State(state): State<Shared>) -> ApiResult<Json<Vec<String>>> {
    blocking(&state, |st| Ok(Json(st.jobs.report_ids()))).await
}

async fn get_report(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<EvalReport>> {
    blocking(&state, move |st| Ok(Json(st.jobs.report(&id)?))).await
}

async fn report_plots(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Vec<PlotData>>> {
    blocking(&state, move |st| Ok(Json(report_plot_data(&st.jobs.report(&id)?)))).await
}
