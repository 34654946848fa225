use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// Error body of every failed request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                field: None,
            },
        }
    }

    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        let mut e = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message);
        e.body.field = Some(field.into());
        e
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<actsearch_core::Error> for ApiError {
    fn from(e: actsearch_core::Error) -> Self {
        use actsearch_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Param { field, .. } => ApiError::validation(field, msg),
            E::AlreadyLabeled(_) => ApiError::conflict(msg),
            E::OutOfRange { .. } => ApiError::new(StatusCode::NOT_FOUND, "not_found", msg),
            E::Exhausted => ApiError::new(StatusCode::GONE, "exhausted", msg),
            E::TooLarge { .. } | E::Shape(_) | E::Precondition(_) | E::ZeroDegree { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unprocessable", msg)
            }
            E::Numerical(_) | E::SingularUpdate { .. } | E::SingularImpact { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "numerical", msg)
            }
            _ => ApiError::internal(msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Startup failures.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] actsearch_core::Error),
    #[error("session log: {0}")]
    Io(#[from] std::io::Error),
    #[error("session log line {line}: {msg}")]
    Replay { line: usize, msg: String },
}
