//! HTTP facade over as-you-type search sessions on one loaded dataset.

mod config;

pub use config::{ConfigError, ServiceConfig};

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use topks_api::{
    CreateSession, ErrorBody, Health, KeystrokeEvent, ResultItem, Score, SessionCreated, Status, TopKResponse,
};
use topks_core::corpus::ingest_triples;
use topks_core::engine::Status as EngineStatus;
use topks_core::socialgraph::SimilarityGraph;
use topks_core::{Dataset, EngineConfig, Keystroke, Session, TopKResult};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("reading {0}: {1}")]
    Io(String, std::io::Error),
}

/// Reads the triple and edge files named in the config.
pub fn load_dataset(cfg: &ServiceConfig) -> Result<Dataset, LoadError> {
    let open = |p: &std::path::Path| {
        File::open(p)
            .map(BufReader::new)
            .map_err(|e| LoadError::Io(p.display().to_string(), e))
    };
    let ingested =
        ingest_triples(open(&cfg.triples)?).map_err(|e| LoadError::Io(cfg.triples.display().to_string(), e))?;
    for d in &ingested.diagnostics {
        tracing::warn!(line = d.line, "skipped triple: {}", d.message);
    }
    let graph = match &cfg.edges {
        Some(p) => {
            let (g, diags) = SimilarityGraph::read(open(p)?).map_err(|e| LoadError::Io(p.display().to_string(), e))?;
            for d in &diags {
                tracing::warn!(line = d.line, "skipped edge: {}", d.message);
            }
            g
        }
        None => SimilarityGraph::from_edges(Vec::<(String, String, f64)>::new()).expect("empty graph"),
    };
    Ok(Dataset::new(ingested.corpus, graph))
}

struct Entry {
    session: Session,
    result: TopKResponse,
}

struct Slot {
    entry: Arc<tokio::sync::Mutex<Entry>>,
    last_active: Instant,
}

pub struct AppState {
    data: Arc<Dataset>,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Slot>>,
}

impl AppState {
    pub fn new(data: Arc<Dataset>, config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            data,
            config,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// Drops sessions idle for longer than the TTL.
    pub fn expire_idle(&self) -> usize {
        let ttl = self.config.session_ttl;
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| s.last_active.elapsed() <= ttl);
        before - sessions.len()
    }

    fn touch(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Entry>>, ApiError> {
        let mut sessions = self.sessions.lock().unwrap();
        match sessions.get_mut(id) {
            Some(s) if s.last_active.elapsed() <= self.config.session_ttl => {
                s.last_active = Instant::now();
                Ok(s.entry.clone())
            }
            Some(_) => {
                sessions.remove(id);
                Err(ApiError::NoSession)
            }
            None => Err(ApiError::NoSession),
        }
    }
}

enum ApiError {
    BadRequest(String),
    UnknownSeeker(String),
    NoSession,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, error) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::UnknownSeeker(s) => (StatusCode::NOT_FOUND, format!("unknown seeker {s:?}")),
            ApiError::NoSession => (StatusCode::NOT_FOUND, "unknown or expired session".to_string()),
        };
        (code, Json(ErrorBody { error })).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::BadRequest(r.body_text())
    }
}

fn to_response(ds: &Dataset, r: &TopKResult) -> TopKResponse {
    TopKResponse {
        items: r
            .entries
            .iter()
            .map(|e| ResultItem {
                item: ds.corpus().item_name(e.item).to_string(),
                min: Score(e.min),
                max: Score(e.max),
                status: match e.status {
                    EngineStatus::Guaranteed => Status::Guaranteed,
                    EngineStatus::Possible => Status::Possible,
                },
            })
            .collect(),
        exact: r.exact,
        elapsed_ms: r.elapsed.as_secs_f64() * 1e3,
        visited_users: r.visited_users,
    }
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let Json(req) = body?;
    let ds = &app.data;
    let seeker = ds.seeker(&req.seeker);
    if seeker.is_none() && ds.corpus().user_id(&req.seeker).is_none() && !app.config.allow_unknown {
        return Err(ApiError::UnknownSeeker(req.seeker));
    }
    let time_budget = match req.budget_ms {
        Some(0) => return Err(ApiError::BadRequest("budget_ms must be at least 1".into())),
        Some(ms) => Some(Duration::from_millis(ms)),
        None => app.config.default_budget,
    };
    let cfg = EngineConfig {
        k: req.k.unwrap_or(app.config.default_k),
        alpha: req.alpha.unwrap_or(app.config.default_alpha),
        time_budget,
        ..EngineConfig::default()
    };
    let session = Session::new(ds.clone(), seeker, cfg).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let id = uuid::Uuid::new_v4().to_string();
    let entry = Entry {
        session,
        result: TopKResponse::empty(),
    };
    app.sessions.lock().unwrap().insert(
        id.clone(),
        Slot {
            entry: Arc::new(tokio::sync::Mutex::new(entry)),
            last_active: Instant::now(),
        },
    );
    tracing::debug!(%id, seeker = %req.seeker, "session created");
    Ok((StatusCode::CREATED, Json(SessionCreated { session_id: id })))
}

async fn keystroke(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<KeystrokeEvent>, JsonRejection>,
) -> Result<Json<TopKResponse>, ApiError> {
    let Json(event) = body?;
    let key = match &event {
        KeystrokeEvent::Char { value } => {
            let mut chars = value.chars();
            match (chars.next(), chars.next()) {
                (None, _) => return Err(ApiError::BadRequest("empty char".into())),
                (Some(c), None) => Some(Keystroke::AppendChar(c)),
                _ => return Err(ApiError::BadRequest("value must be a single character".into())),
            }
        }
        KeystrokeEvent::NewTerm => Some(Keystroke::NewTerm),
        KeystrokeEvent::Backspace => None,
    };
    let slot = app.touch(&id)?;
    // Requests on one session queue here in arrival order.
    let mut entry = slot.lock_owned().await;
    let entry = tokio::task::spawn_blocking(move || {
        let result = match key {
            Some(k) => Some(entry.session.keystroke(k)),
            None => entry.session.backspace(),
        };
        entry.result = match result {
            Some(r) => to_response(entry.session.dataset(), &r),
            None => TopKResponse::empty(),
        };
        entry
    })
    .await
    .expect("search task panicked");
    Ok(Json(entry.result.clone()))
}

async fn last_result(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<TopKResponse>, ApiError> {
    let slot = app.touch(&id)?;
    let entry = slot.lock().await;
    Ok(Json(entry.result.clone()))
}

async fn health(State(app): State<Arc<AppState>>) -> Json<Health> {
    let ds = &app.data;
    Json(Health {
        status: "ok".into(),
        users: ds.corpus().users().len(),
        items: ds.corpus().items().len(),
        tags: ds.corpus().tags().len(),
        triples: ds.corpus().num_triples(),
        graph_users: ds.graph().num_users(),
        edges: ds.graph().num_edges(),
        sessions: app.sessions.lock().unwrap().len(),
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/keystroke", post(keystroke))
        .route("/sessions/{id}/result", get(last_result))
        .with_state(state)
}

/// Serves until the listener fails, sweeping idle sessions in the
/// background.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    let sweeper = state.clone();
    let period = (state.config.session_ttl / 2).max(Duration::from_millis(100));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = sweeper.expire_idle();
            if n > 0 {
                tracing::debug!(expired = n, "swept idle sessions");
            }
        }
    });
    axum::serve(listener, router(state)).await
}
