//! Request/response schemas and handlers.

use std::collections::BTreeMap;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::Json;
use cuisine_core::classifier::{ClassifierError, CuisineDistribution};
use cuisine_core::corpus::CorpusError;
use cuisine_core::layout::{barycentric_position, DiagramPoint};
use cuisine_core::transform::{SubstitutionSuggestion, TransformSession, DEFAULT_K};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::{ServiceState, SharedState};

/// JSON body extractor that reports every decoding failure as 400.
pub struct StrictJson<T>(pub T);

impl<T: DeserializeOwned, S: Send + Sync> FromRequest<S> for StrictJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        serde_json::from_slice(&bytes)
            .map(StrictJson)
            .map_err(|e| ApiError::bad_request(format!("malformed request: {e}")))
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    pub ingredients: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub ingredients: Vec<String>,
    pub target: String,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestRequest {
    pub ingredient: String,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ApplyRequest {
    pub replaced: String,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct CountryProbability {
    pub country: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ClassifyResponse {
    /// Every country, in model order.
    pub distribution: Vec<CountryProbability>,
    pub dropped_oov: Vec<String>,
    pub diagram_point: DiagramPoint,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct StepView {
    pub replaced: String,
    pub replacement: String,
    pub distribution: Vec<CountryProbability>,
    pub diagram_point: DiagramPoint,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub target: String,
    /// Most probable country of the current recipe.
    pub source: String,
    pub original_ingredients: Vec<String>,
    pub ingredients: Vec<String>,
    pub distribution: Vec<CountryProbability>,
    pub diagram_point: DiagramPoint,
    pub history: Vec<StepView>,
    /// Diagram points of the initial recipe and after each swap.
    pub trail: Vec<DiagramPoint>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct SuggestResponse {
    pub session_id: String,
    pub ingredient: String,
    pub suggestions: Vec<SubstitutionSuggestion>,
}

fn labeled(state: &ServiceState, d: &CuisineDistribution) -> Vec<CountryProbability> {
    state
        .model
        .vocab()
        .countries()
        .iter()
        .zip(d.probs())
        .map(|(c, &p)| CountryProbability {
            country: c.clone(),
            probability: p,
        })
        .collect()
}

fn point(state: &ServiceState, d: &CuisineDistribution) -> DiagramPoint {
    barycentric_position(d, &state.layout).expect("layout and model share the country list")
}

fn view(state: &ServiceState, s: &TransformSession) -> SessionView {
    let current = s.current_distribution();
    let mut trail = vec![point(state, &s.initial_distribution)];
    let history = s
        .history
        .iter()
        .map(|h| {
            let p = point(state, &h.distribution);
            trail.push(p);
            StepView {
                replaced: h.replaced.clone(),
                replacement: h.replacement.clone(),
                distribution: labeled(state, &h.distribution),
                diagram_point: p,
            }
        })
        .collect();
    SessionView {
        session_id: s.id.clone(),
        target: s.target_country.clone(),
        source: s.source_country.clone(),
        original_ingredients: s.original_ingredients.clone(),
        ingredients: s.current_ingredients.clone(),
        distribution: labeled(state, current),
        diagram_point: point(state, current),
        history,
        trail,
    }
}

fn nonempty(ingredients: &[String]) -> Result<(), ApiError> {
    if ingredients.iter().all(|s| s.trim().is_empty()) {
        return Err(ApiError::bad_request("ingredient list is empty"));
    }
    Ok(())
}

pub(crate) async fn classify(
    State(state): State<SharedState>,
    StrictJson(req): StrictJson<ClassifyRequest>,
) -> Result<Json<ClassifyResponse>, ApiError> {
    nonempty(&req.ingredients)?;
    let prediction = state.model.predict_ingredients(&req.ingredients).map_err(|e| match e {
        ClassifierError::Corpus(CorpusError::Unclassifiable { .. }) => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
        }
        e => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    })?;
    Ok(Json(ClassifyResponse {
        distribution: labeled(&state, &prediction.distribution),
        dropped_oov: prediction.dropped,
        diagram_point: point(&state, &prediction.distribution),
    }))
}

pub(crate) async fn layout(State(state): State<SharedState>) -> Json<BTreeMap<String, [f64; 2]>> {
    let l = &state.layout;
    Json(l.countries.iter().cloned().zip(l.positions.iter().copied()).collect())
}

pub(crate) async fn create_session(
    State(state): State<SharedState>,
    StrictJson(req): StrictJson<CreateSessionRequest>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    nonempty(&req.ingredients)?;
    let session = state
        .transformer()
        .start_session(state.next_session_id(), &req.ingredients, &req.target)
        .map_err(|e| ApiError::from_transform(e, false))?;
    let body = view(&state, &session);
    state.insert(session);
    Ok((StatusCode::CREATED, Json(body)))
}

pub(crate) async fn get_session(
    State(state): State<SharedState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let session = state.session(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let s = session.lock().expect("session poisoned");
    Ok(Json(view(&state, &s)))
}

pub(crate) async fn delete_session(
    State(state): State<SharedState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    if state.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::unknown_session(&id))
    }
}

pub(crate) async fn suggest(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    StrictJson(req): StrictJson<SuggestRequest>,
) -> Result<Json<SuggestResponse>, ApiError> {
    let session = state.session(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let s = session.lock().expect("session poisoned");
    let suggestions = state
        .transformer()
        .suggest_by_analogy(&s.current_ingredients, &req.ingredient, &s.target_country, DEFAULT_K)
        .map_err(|e| ApiError::from_transform(e, false))?;
    Ok(Json(SuggestResponse {
        session_id: id,
        ingredient: req.ingredient,
        suggestions,
    }))
}

pub(crate) async fn apply(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    StrictJson(req): StrictJson<ApplyRequest>,
) -> Result<Json<SessionView>, ApiError> {
    let session = state.session(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let mut s = session.lock().expect("session poisoned");
    state
        .transformer()
        .apply_substitution(&mut s, &req.replaced, &req.replacement)
        .map_err(|e| ApiError::from_transform(e, true))?;
    Ok(Json(view(&state, &s)))
}

pub(crate) async fn revert(
    State(state): State<SharedState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let session = state.session(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let mut s = session.lock().expect("session poisoned");
    state
        .transformer()
        .revert(&mut s)
        .map_err(|e| ApiError::from_transform(e, true))?;
    Ok(Json(view(&state, &s)))
}
