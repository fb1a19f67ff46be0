use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::Serialize;
use thiserror::Error;

use delta_lca_core::pipeline::PipelineError;
use delta_lca_core::rules::RuleError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no session `{0}`")]
    UnknownSession(String),
    #[error("no rule `{0}` in this session")]
    UnknownRule(String),
    #[error("design {side} (`{file}`) could not be parsed: {message}")]
    Parse { side: String, file: String, message: String },
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("snapshot: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) | ServiceError::UnknownRule(_) => StatusCode::NOT_FOUND,
            ServiceError::Parse { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Pipeline(PipelineError::Rule(RuleError::DuplicateId(_))) => StatusCode::CONFLICT,
            ServiceError::Pipeline(PipelineError::Rule(_) | PipelineError::Inventory(_)) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Pipeline(PipelineError::Parse(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Pipeline(_) | ServiceError::Io(_) | ServiceError::Internal(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::UnknownRule(_) => "unknown_rule",
            ServiceError::Parse { .. } | ServiceError::Pipeline(PipelineError::Parse(_)) => "parse_error",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Pipeline(PipelineError::Rule(_)) => "invalid_rule",
            ServiceError::Pipeline(PipelineError::Inventory(_)) => "invalid_inventory",
            ServiceError::Pipeline(_) | ServiceError::Io(_) | ServiceError::Internal(_) => "internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.kind(),
            message: self.to_string(),
        };
        crate::api::json_response(self.status(), &body)
    }
}
