//! HTTP facade over the cuisine toolkit.
//!
//! Routes:
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/classify` | `{"ingredients": [..]}` |
//! | GET | `/layout` | |
//! | POST | `/sessions` | `{"ingredients": [..], "target": ".."}` |
//! | GET | `/sessions/{id}` | |
//! | DELETE | `/sessions/{id}` | |
//! | POST | `/sessions/{id}/suggest` | `{"ingredient": ".."}` |
//! | POST | `/sessions/{id}/apply` | `{"replaced": "..", "replacement": ".."}` |
//! | POST | `/sessions/{id}/revert` | |
//!
//! Anything else falls through to the static web bundle when one is configured.

mod api;
mod error;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::routing::{get, post};
use axum::Router;
use cuisine_core::classifier::{ClassifierError, MlpModel};
use cuisine_core::embeddings::{EmbeddingError, EmbeddingSpace};
use cuisine_core::layout::{country_similarity, spectral_circle_layout, CircleLayout, EigenSelection, LayoutError};
use cuisine_core::transform::{TransformError, TransformSession, Transformer};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::services::ServeDir;

pub use api::*;
pub use error::ApiError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot load classifier: {0}")]
    Model(#[from] ClassifierError),
    #[error("cannot load embeddings: {0}")]
    Embeddings(#[from] EmbeddingError),
    #[error("cannot lay out countries: {0}")]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

/// Loaded artifacts plus the in-memory session store.
pub struct ServiceState {
    model: MlpModel,
    space: EmbeddingSpace,
    layout: CircleLayout,
    sessions: RwLock<HashMap<String, Arc<Mutex<TransformSession>>>>,
    next_id: AtomicU64,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    next_id: u64,
    sessions: BTreeMap<String, TransformSession>,
}

impl ServiceState {
    /// Builds the state and lays out the countries from the embedding space.
    pub fn new(model: MlpModel, space: EmbeddingSpace) -> Result<Self, ServiceError> {
        let layout = spectral_circle_layout(&country_similarity(&space)?, EigenSelection::Largest)?;
        Self::with_layout(model, space, layout)
    }

    pub fn with_layout(model: MlpModel, space: EmbeddingSpace, layout: CircleLayout) -> Result<Self, ServiceError> {
        Transformer::new(&model, &space)?;
        Ok(ServiceState {
            model,
            space,
            layout,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn transformer(&self) -> Transformer<'_> {
        Transformer::new(&self.model, &self.space).expect("vocabularies checked at construction")
    }

    pub fn layout(&self) -> &CircleLayout {
        &self.layout
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    fn next_session_id(&self) -> String {
        format!("s{}", self.next_id.fetch_add(1, Ordering::SeqCst))
    }

    fn insert(&self, session: TransformSession) {
        let id = session.id.clone();
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id, Arc::new(Mutex::new(session)));
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<TransformSession>>> {
        self.sessions.read().expect("session map poisoned").get(id).cloned()
    }

    fn remove(&self, id: &str) -> bool {
        self.sessions
            .write()
            .expect("session map poisoned")
            .remove(id)
            .is_some()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    /// Serializes every session as JSON.
    pub fn snapshot(&self) -> String {
        let sessions = self
            .sessions
            .read()
            .expect("session map poisoned")
            .iter()
            .map(|(id, s)| (id.clone(), s.lock().expect("session poisoned").clone()))
            .collect();
        let snap = Snapshot {
            next_id: self.next_id.load(Ordering::SeqCst),
            sessions,
        };
        serde_json::to_string(&snap).expect("sessions serialize")
    }

    /// Writes the snapshot next to `path` and renames it into place.
    pub fn write_snapshot(&self, path: &Path) -> Result<(), ServiceError> {
        let tmp = path.with_extension("tmp");
        let err = |e: std::io::Error| ServiceError::Snapshot {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        std::fs::write(&tmp, self.snapshot()).map_err(err)?;
        std::fs::rename(&tmp, path).map_err(err)
    }

    /// Replaces the session store with a snapshot's contents.
    pub fn restore(&self, json: &str) -> Result<(), serde_json::Error> {
        let snap: Snapshot = serde_json::from_str(json)?;
        let mut map = self.sessions.write().expect("session map poisoned");
        map.clear();
        for (id, s) in snap.sessions {
            map.insert(id, Arc::new(Mutex::new(s)));
        }
        self.next_id.store(snap.next_id, Ordering::SeqCst);
        Ok(())
    }
}

pub type SharedState = Arc<ServiceState>;

/// API routes, plus static files from `static_dir` for everything else.
pub fn router(state: SharedState, static_dir: Option<&Path>) -> Router {
    let app = Router::new()
        .route("/classify", post(api::classify))
        .route("/layout", get(api::layout))
        .route("/sessions", post(api::create_session))
        .route("/sessions/{id}", get(api::get_session).delete(api::delete_session))
        .route("/sessions/{id}/suggest", post(api::suggest))
        .route("/sessions/{id}/apply", post(api::apply))
        .route("/sessions/{id}/revert", post(api::revert))
        .with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub model_path: PathBuf,
    pub embedding_path: PathBuf,
    pub addr: SocketAddr,
    pub static_dir: Option<PathBuf>,
    /// Session snapshot file, restored at startup and rewritten periodically.
    pub snapshot: Option<PathBuf>,
    pub snapshot_interval: Duration,
}

pub fn load_state(config: &ServerConfig) -> Result<ServiceState, ServiceError> {
    let model = MlpModel::load(&config.model_path)?;
    let space = EmbeddingSpace::load(&config.embedding_path)?;
    let state = ServiceState::new(model, space)?;
    if let Some(path) = &config.snapshot {
        if path.exists() {
            let json = std::fs::read_to_string(path)?;
            state.restore(&json).map_err(|e| ServiceError::Snapshot {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
    }
    Ok(state)
}

/// Runs the server until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServiceError> {
    let state = Arc::new(load_state(&config)?);
    if let Some(path) = config.snapshot.clone() {
        let state = state.clone();
        let every = config.snapshot_interval;
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(every);
            loop {
                tick.tick().await;
                if let Err(e) = state.write_snapshot(&path) {
                    tracing::warn!("{e}");
                }
            }
        });
    }
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    let app = router(state.clone(), config.static_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(path) = &config.snapshot {
        state.write_snapshot(path)?;
    }
    Ok(())
}
