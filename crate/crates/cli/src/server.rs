//! HTTP interface for the expert console. Request and response bodies are
//! the canonical JSON documents used on disk.

// Handlers bail out early with a ready response; boxing it buys nothing.
#![allow(clippy::result_large_err)]

use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use tempered::envelope::{config_hash, EnvelopeConfig, TuningStatus};
use tempered::service::{Service, ServiceError};
use tempered::trace::{TraceEntry, TraceError};

pub type Shared = Arc<Mutex<Service>>;

pub fn router(service: Service) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/config", get(get_config).put(put_config))
        .route("/tuning-events", get(tuning_events))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/taps", post(append_taps))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/reports", get(list_reports))
        .route("/reports/{id}", get(get_report))
        .route("/reports/{id}/audio", get(get_audio))
        .route("/reports/{id}/loudness", get(get_loudness))
        .with_state(Arc::new(Mutex::new(service)))
}

fn document<T: Serialize>(status: StatusCode, value: &T) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], Service::canonical(value)).into_response()
}

fn error(status: StatusCode, kind: &str, message: impl ToString) -> Response {
    document(status, &json!({ "error": kind, "message": message.to_string() }))
}

struct ServiceErrorResponse(ServiceError);

impl IntoResponse for ServiceErrorResponse {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::UnknownReport(_) => (StatusCode::NOT_FOUND, "unknown_report"),
            ServiceError::Finalized(_) => (StatusCode::CONFLICT, "finalized"),
            ServiceError::Expired { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "session_expired"),
            ServiceError::Trace(TraceError::EmptyTrace) => (StatusCode::UNPROCESSABLE_ENTITY, "empty_trace"),
            ServiceError::Trace(_) => (StatusCode::UNPROCESSABLE_ENTITY, "schema_violation"),
            ServiceError::Report(_) | ServiceError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        error(status, kind, self.0)
    }
}

type Reply = Result<Response, Response>;

fn lock(state: &Shared) -> std::sync::MutexGuard<'_, Service> {
    state.lock().unwrap_or_else(|p| p.into_inner())
}

fn svc<T>(r: Result<T, ServiceError>) -> Result<T, Response> {
    r.map_err(|e| ServiceErrorResponse(e).into_response())
}

fn parse<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, Response> {
    serde_json::from_slice(body).map_err(|e| error(StatusCode::BAD_REQUEST, "malformed_document", e))
}

async fn get_config(State(s): State<Shared>) -> Response {
    document(StatusCode::OK, lock(&s).active_config())
}

async fn put_config(State(s): State<Shared>, body: Bytes) -> Reply {
    let proposed = EnvelopeConfig::from_document(&body).map_err(|e| error(StatusCode::BAD_REQUEST, "invalid_config", e))?;
    let mut guard = lock(&s);
    let event = guard.propose_config(&proposed);
    let status = match event.status {
        TuningStatus::Accepted => StatusCode::OK,
        TuningStatus::Rejected => StatusCode::UNPROCESSABLE_ENTITY,
    };
    let active = config_hash(guard.active_config());
    Ok(document(status, &json!({ "event": event, "active_config_hash": active })))
}

async fn tuning_events(State(s): State<Shared>) -> Response {
    document(StatusCode::OK, &lock(&s).tuning_log())
}

async fn create_session(State(s): State<Shared>) -> Response {
    document(StatusCode::CREATED, &lock(&s).create_session())
}

async fn get_session(State(s): State<Shared>, Path(id): Path<String>) -> Reply {
    Ok(document(StatusCode::OK, &svc(lock(&s).session(&id))?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Taps {
    entries: Vec<TraceEntry>,
}

async fn append_taps(State(s): State<Shared>, Path(id): Path<String>, body: Bytes) -> Reply {
    let taps: Taps = parse(&body)?;
    let count = svc(lock(&s).append_taps(&id, taps.entries))?;
    Ok(document(StatusCode::OK, &json!({ "session_id": id, "tap_count": count })))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FinalizeRequest {
    #[serde(default, with = "opt_seed")]
    seed: Option<u64>,
}

mod opt_seed {
    use serde::{Deserialize, Deserializer};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

async fn finalize(State(s): State<Shared>, Path(id): Path<String>, body: Bytes) -> Reply {
    let req: FinalizeRequest = if body.iter().all(u8::is_ascii_whitespace) { FinalizeRequest::default() } else { parse(&body)? };
    let mut guard = lock(&s);
    let report = svc(guard.finalize(&id, req.seed))?;
    let wav = svc(guard.audio_wav(&id, false))?;
    let audio = base64::engine::general_purpose::STANDARD.encode(wav);
    Ok(document(StatusCode::OK, &json!({ "report": report, "audio_wav_base64": audio })))
}

async fn list_reports(State(s): State<Shared>) -> Response {
    document(StatusCode::OK, &lock(&s).reports())
}

async fn get_report(State(s): State<Shared>, Path(id): Path<String>) -> Reply {
    let guard = lock(&s);
    let report = svc(guard.report(&id))?;
    Ok((StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], tempered::serialize_report(report)).into_response())
}

#[derive(Deserialize)]
struct AudioQuery {
    #[serde(default)]
    condition: Option<String>,
}

async fn get_audio(State(s): State<Shared>, Path(id): Path<String>, Query(q): Query<AudioQuery>) -> Reply {
    let baseline = match q.condition.as_deref() {
        None | Some("constrained") => false,
        Some("baseline") => true,
        Some(other) => return Err(error(StatusCode::BAD_REQUEST, "bad_condition", format!("unknown condition {other:?}"))),
    };
    let wav = svc(lock(&s).audio_wav(&id, baseline))?;
    Ok((StatusCode::OK, [(header::CONTENT_TYPE, "audio/wav")], wav).into_response())
}

async fn get_loudness(State(s): State<Shared>, Path(id): Path<String>) -> Reply {
    Ok(document(StatusCode::OK, &svc(lock(&s).loudness(&id))?))
}
