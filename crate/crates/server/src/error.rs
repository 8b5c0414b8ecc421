use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use cgs_core::{IngestError, LayoutError, ModelError, PruneError, SessionError};
use serde::Serialize;
use thiserror::Error;

/// Errors returned by the HTTP API, each mapped to one status code.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("unknown graph {0}")]
    UnknownGraph(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("{0}")]
    NotFound(String),
    #[error("revision {given} is stale; current revision is {current}")]
    StaleRevision { given: u64, current: u64 },
    #[error("graph {name} cannot be loaded: {message}")]
    InvalidGraph { name: String, message: String },
    #[error("{0}")]
    Unprocessable(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::UnknownGraph(_) | ApiError::UnknownSession(_) | ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::StaleRevision { .. } => StatusCode::CONFLICT,
            ApiError::InvalidGraph { .. } | ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "bad_request",
            ApiError::UnknownGraph(_) => "unknown_graph",
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::NotFound(_) => "not_found",
            ApiError::StaleRevision { .. } => "stale_revision",
            ApiError::InvalidGraph { .. } => "invalid_graph",
            ApiError::Unprocessable(_) => "unprocessable",
            ApiError::Internal(_) => "internal",
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::UnknownNode(_) | SessionError::Prune(PruneError::UnknownPort(_)) => ApiError::NotFound(e.to_string()),
            SessionError::InvalidOptions(_) => ApiError::BadRequest(e.to_string()),
            _ => ApiError::Unprocessable(e.to_string()),
        }
    }
}

impl From<PruneError> for ApiError {
    fn from(e: PruneError) -> Self {
        match e {
            PruneError::UnknownPort(_) => ApiError::NotFound(e.to_string()),
            PruneError::UnresolvedEndpoint(_) => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<LayoutError> for ApiError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::InvalidParams(_) => ApiError::BadRequest(e.to_string()),
            LayoutError::CycleWithoutFeedbackSet(_) => ApiError::Unprocessable(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    revision: Option<u64>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let revision = match self {
            ApiError::StaleRevision { current, .. } => Some(current),
            _ => None,
        };
        let body = ErrorBody {
            error: ErrorDetail {
                code: self.code(),
                message: self.to_string(),
            },
            revision,
        };
        (self.status(), axum::Json(body)).into_response()
    }
}

/// CLI failures; the variant decides the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: IngestError,
    },
    #[error("{0}")]
    Semantic(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse { .. } => 2,
            CliError::Semantic(_) => 3,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Semantic(e.to_string())
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        CliError::Semantic(e.to_string())
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        CliError::Semantic(e.to_string())
    }
}
