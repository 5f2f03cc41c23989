//! JSON HTTP API over named sessions.
//!
//! Each session sits behind its own mutex, so label posts to one session are
//! applied in arrival order and a post that lost the race sees the next
//! pending query and gets 409. Work that retrains models runs on the
//! blocking pool.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use alforge_core::oracle::{scale_model_confidence, ExpertInput};
use alforge_core::session::{QueryPhase, SCHEMA_VERSION};
use alforge_core::{Error, MetricSnapshot, RunConfig, Session, SessionStatus};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

type Shared = Arc<Mutex<Session>>;

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<BTreeMap<String, Shared>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    /// Registers a session and returns its id.
    pub fn insert(&self, session: Session) -> String {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::SeqCst) + 1);
        self.sessions
            .write()
            .expect("session table poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        id
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id:?}")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}/pending", get(pending))
        .route("/sessions/{id}/label", post(label))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/state", get(session_state))
        .route("/sessions/{id}/stop", post(stop))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotPending { .. } | Error::Stopped | Error::AlreadyLabeled(_) => StatusCode::CONFLICT,
            Error::Io(_)
            | Error::Parse { .. }
            | Error::EmptyDataset
            | Error::UnknownId(_)
            | Error::UnknownClass { .. }
            | Error::Domain(_)
            | Error::OutOfRange(_)
            | Error::InvalidConfig(_)
            | Error::Json(_)
            | Error::SchemaVersionMismatch { .. }
            | Error::RuleBaseMismatch { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidK { .. }
            | Error::GroundTruthMissing(_)
            | Error::SingleClass => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "schema_version": SCHEMA_VERSION, "error": self.message });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn reply<T: Serialize>(body: T) -> ApiResult {
    let mut value = serde_json::to_value(body).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    if let Value::Object(map) = &mut value {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    Ok(Json(value))
}

fn parse<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("bad request body: {e}")))
}

/// Runs `f` on the blocking pool with the session locked.
async fn with_session<T, F>(shared: Shared, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || {
        let mut guard = shared
            .lock()
            .map_err(|_| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "session lock poisoned"))?;
        f(&mut guard)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Serialize)]
struct StateView {
    session_id: String,
    status: SessionStatus,
    queries_made: usize,
    budget: usize,
    labeled: usize,
    unlabeled: usize,
    strategy_index: usize,
    strategy: String,
    switch_points: Vec<usize>,
    s_al: Option<f64>,
    pending_instance: Option<usize>,
    snapshots: usize,
}

fn state_view(id: &str, s: &Session) -> StateView {
    StateView {
        session_id: id.to_string(),
        status: s.status(),
        queries_made: s.queries_made(),
        budget: s.config().policy.budget,
        labeled: s.dataset().labeled().len(),
        unlabeled: s.dataset().unlabeled().len(),
        strategy_index: s.strategy_index(),
        strategy: s.current_strategy().name().to_string(),
        switch_points: s.switch_points().to_vec(),
        s_al: s.overall_confidence().ok(),
        pending_instance: s.pending().map(|p| p.instance_id),
        snapshots: s.history().len(),
    }
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let config: RunConfig = parse(&body)?;
    let session = tokio::task::spawn_blocking(move || Session::init(config))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let id = app.insert(session);
    let shared = app.get(&id)?;
    let view = with_session(shared, move |s| Ok(state_view(&id, s))).await?;
    reply(view)
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> ApiResult {
    let ids: Vec<String> = app.sessions.read().expect("session table poisoned").keys().cloned().collect();
    reply(json!({ "sessions": ids }))
}

#[derive(Serialize)]
struct PendingView {
    status: SessionStatus,
    instance_id: Option<usize>,
    phase: Option<QueryPhase>,
    query_index: Option<usize>,
    strategy: Option<String>,
    features: Option<Vec<f64>>,
    class_names: Vec<String>,
    model_posterior: Option<Vec<f64>>,
    model_score: Option<u8>,
}

async fn pending(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let view = with_session(app.get(&id)?, |s| {
        let mut view = PendingView {
            status: s.status(),
            instance_id: None,
            phase: None,
            query_index: None,
            strategy: None,
            features: None,
            class_names: s.dataset().class_names().to_vec(),
            model_posterior: None,
            model_score: None,
        };
        if let Some(p) = s.pending() {
            let posterior = s.posterior(p.instance_id)?;
            view.instance_id = Some(p.instance_id);
            view.phase = Some(p.phase);
            view.query_index = Some(p.query_index);
            view.strategy = Some(s.config().policy.schedule[p.strategy_index].name().to_string());
            view.features = Some(s.dataset().features(p.instance_id).to_vec());
            view.model_score = posterior
                .as_ref()
                .map(|q| scale_model_confidence(q.max_prob()))
                .transpose()?;
            view.model_posterior = posterior.map(|q| q.probs().to_vec());
        }
        Ok(view)
    })
    .await?;
    reply(view)
}

/// A class given by index or by name.
#[derive(Deserialize)]
#[serde(untagged)]
enum ClassRef {
    Index(usize),
    Name(String),
}

/// Stated confidence: a level 1..=5, or absent / null / "not provided".
#[derive(Deserialize)]
#[serde(untagged)]
enum Z2 {
    Level(u8),
    Text(String),
}

#[derive(Deserialize)]
struct LabelRequest {
    instance_id: usize,
    label: ClassRef,
    z1: u8,
    #[serde(default)]
    z2: Option<Z2>,
    #[serde(default)]
    timestamp: Option<u64>,
}

#[derive(Serialize)]
struct LabelReply {
    status: SessionStatus,
    queries_made: usize,
    snapshot: Option<MetricSnapshot>,
    next_instance: Option<usize>,
}

async fn label(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let request: LabelRequest = parse(&body)?;
    let z2 = match request.z2 {
        None => None,
        Some(Z2::Level(v)) => Some(v),
        Some(Z2::Text(t)) if t.eq_ignore_ascii_case("not provided") || t.eq_ignore_ascii_case("not_provided") => None,
        Some(Z2::Text(t)) => return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("bad z2 {t:?}"))),
    };
    let timestamp = request.timestamp.or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs())
    });
    let out = with_session(app.get(&id)?, move |s| {
        let label = match request.label {
            ClassRef::Index(i) => i,
            ClassRef::Name(name) => s
                .dataset()
                .class_names()
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, format!("unknown class {name:?}")))?,
        };
        let input = ExpertInput {
            label,
            z1: request.z1,
            z2,
        };
        s.submit_label(request.instance_id, input, timestamp)?;
        Ok(LabelReply {
            status: s.status(),
            queries_made: s.queries_made(),
            snapshot: s.history().last().cloned(),
            next_instance: s.pending().map(|p| p.instance_id),
        })
    })
    .await?;
    reply(out)
}

#[derive(Deserialize)]
struct MetricsQuery {
    #[serde(default)]
    from: usize,
}

async fn metrics(State(app): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<MetricsQuery>) -> ApiResult {
    let snapshots = with_session(app.get(&id)?, move |s| {
        Ok(s.history()
            .iter()
            .filter(|h| h.query_index >= q.from)
            .cloned()
            .collect::<Vec<_>>())
    })
    .await?;
    reply(json!({ "snapshots": snapshots }))
}

async fn session_state(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let key = id.clone();
    let view = with_session(app.get(&id)?, move |s| Ok(state_view(&key, s))).await?;
    reply(view)
}

async fn stop(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let key = id.clone();
    let view = with_session(app.get(&id)?, move |s| {
        s.stop();
        Ok(state_view(&key, s))
    })
    .await?;
    reply(view)
}
