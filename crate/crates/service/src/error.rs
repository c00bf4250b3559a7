use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};
use vrptw_core::Error;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
            detail: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "usage_error", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "usage_error", message)
    }

    pub fn state(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "state_error", message)
    }

    pub fn busy() -> Self {
        Self::new(StatusCode::CONFLICT, "job_in_progress", "job in progress")
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, kind) = match &e {
            Error::Parse { .. } | Error::Document(_) | Error::Load { .. } => {
                (StatusCode::BAD_REQUEST, "parse_error")
            }
            Error::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation_error"),
            Error::Config(_) | Error::Usage(_) => (StatusCode::BAD_REQUEST, "usage_error"),
            Error::State(_) => (StatusCode::CONFLICT, "state_error"),
            Error::Infeasible(_) => (StatusCode::UNPROCESSABLE_ENTITY, "infeasible_constraints"),
        };
        Self::new(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind, "message": self.message });
        if let Some(detail) = self.detail {
            body["detail"] = detail;
        }
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
