//! HTTP facade over one ledger.
//!
//! * `POST /v1/events` appends an `EventDraft` and answers 201 with the
//!   completed record.
//! * `GET /v1/events?model_id=&dataset_id=&deployment_id=&type=&from=&to=`
//!   returns matching records in ledger order.
//! * `GET /v1/verify` replays the chain.
//!
//! Integrity fields are always computed here, never by the emitter. When a
//! token is configured every route requires `Authorization: Bearer <token>`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use audit_trail::chain::{load_key, ChainError, TrustStore};
use audit_trail::event::{parse_timestamp, EventDraft, EventType};
use audit_trail::ledger::{read_records, EventStore, Ledger, LedgerError};
use audit_trail::query::{filter_events, EventFilter};
use audit_trail::verify::verify_log;
use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, RawQuery, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::{json, Value};
use thiserror::Error;

pub const DEFAULT_MAX_DETAILS_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub ledger_path: PathBuf,
    pub sign_key: Option<PathBuf>,
    pub token: Option<String>,
    pub max_details_bytes: usize,
}

impl ServiceConfig {
    pub fn new(ledger_path: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            ledger_path: ledger_path.into(),
            sign_key: None,
            token: None,
            max_details_bytes: DEFAULT_MAX_DETAILS_BYTES,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("max_details_bytes must be positive")]
    InvalidConfig,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Key(#[from] ChainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    ledger: Mutex<Ledger>,
    path: PathBuf,
    token: Option<String>,
    max_details_bytes: usize,
    trust: TrustStore,
}

impl AppState {
    /// Opens (creating if needed) the configured ledger.
    pub fn open(config: &ServiceConfig) -> Result<Arc<AppState>, ServiceError> {
        if config.max_details_bytes == 0 {
            return Err(ServiceError::InvalidConfig);
        }
        let key = config.sign_key.as_ref().map(load_key).transpose()?;
        let mut trust = TrustStore::new();
        if let Some(k) = &key {
            trust.add(k);
        }
        let ledger = Ledger::open(&config.ledger_path, key, true)?;
        Ok(Arc::new(AppState {
            ledger: Mutex::new(ledger),
            path: config.ledger_path.clone(),
            token: config.token.clone(),
            max_details_bytes: config.max_details_bytes,
            trust,
        }))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    // whole-body cap well above the details cap so oversized details get a
    // precise 413 from the handler rather than a generic one
    let body_limit = state.max_details_bytes.saturating_mul(4).max(1 << 20);
    Router::new()
        .route("/v1/events", get(list_events).post(post_event))
        .route("/v1/verify", get(verify))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

/// Binds `config.bind` and serves until the process exits.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::open(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, ledger = %config.ledger_path.display(), "serving");
    serve_on(listener, state).await
}

pub async fn serve_on(listener: tokio::net::TcpListener, state: Arc<AppState>) -> Result<(), ServiceError> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn authorized(state: &AppState, headers: &HeaderMap) -> bool {
    let Some(token) = &state.token else {
        return true;
    };
    let presented = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .unwrap_or("");
    // length leaks, contents do not
    presented.len() == token.len()
        && presented
            .bytes()
            .zip(token.bytes())
            .fold(0u8, |acc, (a, b)| acc | (a ^ b))
            == 0
}

fn unauthorized() -> Response {
    let mut r = error(StatusCode::UNAUTHORIZED, "missing or wrong bearer token");
    r.headers_mut()
        .insert(header::WWW_AUTHENTICATE, header::HeaderValue::from_static("Bearer"));
    r
}

async fn post_event(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    if !authorized(&state, &headers) {
        return unauthorized();
    }
    let value: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("body is not JSON: {e}")),
    };
    if let Some(details) = value.get("details") {
        let size = serde_json::to_vec(details).map(|v| v.len()).unwrap_or(usize::MAX);
        if size > state.max_details_bytes {
            return error(
                StatusCode::PAYLOAD_TOO_LARGE,
                format!("details is {size} bytes; limit is {}", state.max_details_bytes),
            );
        }
    }
    let draft: EventDraft = match serde_json::from_value(value) {
        Ok(d) => d,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("not an event draft: {e}")),
    };

    let st = state.clone();
    let appended = tokio::task::spawn_blocking(move || {
        let mut ledger = st.ledger.lock().unwrap_or_else(|p| p.into_inner());
        ledger.append(draft)
    })
    .await;
    match appended {
        Ok(Ok(record)) => (StatusCode::CREATED, Json(record)).into_response(),
        Ok(Err(LedgerError::ValidationFailed(violations))) => (
            StatusCode::BAD_REQUEST,
            Json(json!({ "error": "validation failed", "violations": violations })),
        )
            .into_response(),
        Ok(Err(e @ LedgerError::LockUnavailable(_))) => error(StatusCode::SERVICE_UNAVAILABLE, e.to_string()),
        Ok(Err(e @ LedgerError::DuplicateEventId(_))) => error(StatusCode::CONFLICT, e.to_string()),
        Ok(Err(e)) => {
            tracing::error!(error = %e, "append failed");
            error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// Parses the query string of `GET /v1/events`. `type` may repeat and may
/// hold comma-separated names; every other key may appear once.
pub fn parse_filter(query: Option<&str>) -> Result<EventFilter, String> {
    let mut f = EventFilter::new();
    let mut types: Vec<EventType> = Vec::new();
    for (k, v) in url::form_urlencoded::parse(query.unwrap_or("").as_bytes()) {
        let once = |slot: &mut Option<String>| -> Result<(), String> {
            if slot.is_some() {
                return Err(format!("{k} given twice"));
            }
            if v.is_empty() {
                return Err(format!("{k} is empty"));
            }
            *slot = Some(v.to_string());
            Ok(())
        };
        match k.as_ref() {
            "model_id" => once(&mut f.model_id)?,
            "dataset_id" => once(&mut f.dataset_id)?,
            "deployment_id" => once(&mut f.deployment_id)?,
            "actor" => once(&mut f.actor)?,
            "system" => once(&mut f.system)?,
            "type" => {
                for name in v.split(',') {
                    if name.is_empty() {
                        return Err("empty event type".into());
                    }
                    types.push(EventType::parse_lossy(name));
                }
            }
            "from" | "to" => {
                let t = parse_timestamp(&v).map_err(|e| format!("{k}: {e}"))?;
                let slot = if k == "from" { &mut f.time_from } else { &mut f.time_to };
                if slot.replace(t).is_some() {
                    return Err(format!("{k} given twice"));
                }
            }
            other => return Err(format!("unknown parameter {other}")),
        }
    }
    if !types.is_empty() {
        f.event_types = Some(types);
    }
    f.validate().map_err(|e| e.to_string())?;
    Ok(f)
}

async fn list_events(State(state): State<Arc<AppState>>, headers: HeaderMap, RawQuery(query): RawQuery) -> Response {
    if !authorized(&state, &headers) {
        return unauthorized();
    }
    let filter = match parse_filter(query.as_deref()) {
        Ok(f) => f,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let path = state.path.clone();
    let read = tokio::task::spawn_blocking(move || read_records(path)).await;
    match read {
        Ok(Ok(out)) => Json(filter_events(&out.records, &filter)).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn verify(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    if !authorized(&state, &headers) {
        return unauthorized();
    }
    let st = state.clone();
    let report = tokio::task::spawn_blocking(move || verify_log(&st.path, Some(&st.trust))).await;
    match report {
        Ok(Ok(r)) => Json(r).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}
