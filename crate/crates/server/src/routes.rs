//! Route table and handlers. Engine calls run on the blocking pool because
//! gateway calls block for up to the provider deadline.

use std::sync::Arc;

use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use counterquill_core::cowrite::Selection;
use counterquill_core::learning::{Curriculum, OptionLabel};
use counterquill_core::llm::RewriteMode;
use counterquill_core::study::Instrument;
use counterquill_core::{Engine, NewSession, NoteSource, SessionId, SpanKind, TextSpan};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub token: Option<Arc<str>>,
}

/// JSON body whose rejections use the uniform error shape.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|e| ApiError::invalid(e.body_text()))
    }
}

async fn blocking<T, F>(f: F) -> Result<Json<T>, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> counterquill_core::Result<T> + Send + 'static,
{
    let out = tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker: {e}")))??;
    Ok(Json(out))
}

async fn require_token(State(app): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &app.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == &**token);
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token")
                .into_response();
        }
    }
    next.run(req).await
}

pub fn router(app: AppState) -> Router {
    let api = Router::new()
        .route("/curriculum", get(curriculum))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(session_view))
        .route("/sessions/{id}/learning", post(start_learning))
        .route("/sessions/{id}/quiz", post(grade_quiz))
        .route("/sessions/{id}/highlight-practice", post(highlight_practice))
        .route("/sessions/{id}/highlights", post(submit_highlights))
        .route("/sessions/{id}/diff", get(view_diff))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/sessions/{id}/notes", post(take_note).get(list_notes))
        .route("/sessions/{id}/writing", post(open_writing))
        .route("/sessions/{id}/draft", get(get_draft).post(save_draft))
        .route("/sessions/{id}/draft/history", get(draft_history))
        .route("/sessions/{id}/rewrites", post(request_rewrite))
        .route("/rewrites/{id}/insert", post(insert_result))
        .route("/rewrites/{id}/retry", post(retry_rewrite))
        .route("/sessions/{id}/questionnaire", post(questionnaire))
        .route("/study/export", get(export))
        .route_layer(middleware::from_fn_with_state(app.clone(), require_token));
    Router::new()
        .route("/health", get(health))
        .merge(api)
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "invalid_argument", "method not allowed")
        })
        .with_state(app)
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    provider: String,
    sessions: usize,
}

async fn health(State(app): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok",
        provider: app.engine.provider_name().into(),
        sessions: app.engine.session_ids().len(),
    })
}

async fn curriculum() -> Json<&'static Curriculum> {
    Json(Curriculum::bundled())
}

async fn create_session(State(app): State<AppState>, Body(req): Body<NewSession>) -> Result<Response, ApiError> {
    let s = blocking(move || app.engine.create_session(req)).await?;
    Ok((StatusCode::CREATED, s).into_response())
}

async fn list_sessions(State(app): State<AppState>) -> Json<Vec<SessionId>> {
    Json(app.engine.session_ids())
}

async fn session_view(State(app): State<AppState>, Path(id): Path<SessionId>) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.session_view(&id)).await
}

async fn start_learning(State(app): State<AppState>, Path(id): Path<SessionId>) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.start_learning(&id)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuizBody {
    answers: Vec<OptionLabel>,
}

async fn grade_quiz(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Body(b): Body<QuizBody>,
) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.grade_quiz(&id, &b.answers)).await
}

async fn highlight_practice(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.start_highlight_practice(&id)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Range {
    start: usize,
    end: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HighlightsBody {
    identity: Vec<Range>,
    action: Vec<Range>,
}

fn spans(ranges: Vec<Range>, kind: SpanKind) -> Result<Vec<TextSpan>, ApiError> {
    ranges
        .into_iter()
        .map(|r| TextSpan::new(r.start, r.end, kind).map_err(ApiError::invalid))
        .collect()
}

async fn submit_highlights(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Body(b): Body<HighlightsBody>,
) -> Result<impl IntoResponse, ApiError> {
    let identity = spans(b.identity, SpanKind::Identity)?;
    let action = spans(b.action, SpanKind::Action)?;
    blocking(move || app.engine.submit_highlights(&id, identity, action)).await
}

async fn view_diff(State(app): State<AppState>, Path(id): Path<SessionId>) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.view_diff(&id)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerBody {
    question: u8,
    text: String,
}

async fn submit_answer(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Body(b): Body<AnswerBody>,
) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.submit_answer(&id, b.question, &b.text)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoteBody {
    source: NoteSource,
    text: String,
}

async fn take_note(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Body(b): Body<NoteBody>,
) -> Result<Response, ApiError> {
    let note = blocking(move || app.engine.take_note(&id, b.source, &b.text)).await?;
    Ok((StatusCode::CREATED, note).into_response())
}

async fn list_notes(State(app): State<AppState>, Path(id): Path<SessionId>) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.list_notes(&id)).await
}

async fn open_writing(State(app): State<AppState>, Path(id): Path<SessionId>) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.open_writing(&id)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DraftQuery {
    revision: Option<u32>,
}

async fn get_draft(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    q: Result<Query<DraftQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Query(q) = q.map_err(|e| ApiError::invalid(e.body_text()))?;
    blocking(move || app.engine.draft(&id, q.revision)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DraftBody {
    content: String,
}

async fn save_draft(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Body(b): Body<DraftBody>,
) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.save_draft(&id, &b.content)).await
}

async fn draft_history(State(app): State<AppState>, Path(id): Path<SessionId>) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.draft_history(&id)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RewriteBody {
    selection: Selection,
    mode: RewriteMode,
}

async fn request_rewrite(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Body(b): Body<RewriteBody>,
) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.request_rewrite(&id, b.selection, b.mode)).await
}

async fn insert_result(
    State(app): State<AppState>,
    Path(id): Path<counterquill_core::ExchangeId>,
) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.insert_result(&id)).await
}

async fn retry_rewrite(
    State(app): State<AppState>,
    Path(id): Path<counterquill_core::ExchangeId>,
) -> Result<impl IntoResponse, ApiError> {
    blocking(move || app.engine.retry_rewrite(&id)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionnaireBody {
    instrument: Instrument,
    items: Vec<u8>,
}

async fn questionnaire(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Body(b): Body<QuestionnaireBody>,
) -> Result<Response, ApiError> {
    let r = blocking(move || app.engine.capture_questionnaire(&id, b.instrument, b.items)).await?;
    Ok((StatusCode::CREATED, r).into_response())
}

async fn export(State(app): State<AppState>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], app.engine.export_csv())
}
