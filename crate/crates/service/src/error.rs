use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cuisine_core::transform::TransformError;
use serde::Serialize;

/// An HTTP error with a JSON body `{"error": "..."}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no session '{id}'"))
    }

    /// Maps a transform failure. Inside a swap, every precondition failure is
    /// a conflict with the session state.
    pub fn from_transform(e: TransformError, swapping: bool) -> Self {
        use TransformError::*;
        let status = match &e {
            NotInRecipe(_) | AlreadyInRecipe(_) | NothingToRevert => StatusCode::CONFLICT,
            UnknownIngredient(_) if swapping => StatusCode::CONFLICT,
            UnknownIngredient(_) | UnknownCountry(_) | Unclassifiable => StatusCode::UNPROCESSABLE_ENTITY,
            VocabularyMismatch | Classifier(_) | Embedding(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: &self.message })).into_response()
    }
}
