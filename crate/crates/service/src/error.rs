use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use debias_core::engine::EngineError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("game `{0}` not found")]
    NotFound(String),
    #[error("role `{0}` is already taken")]
    RoleTaken(String),
    #[error("no player has role `{0}`")]
    UnknownRole(String),
    #[error("missing, stale or invalid session token")]
    Unauthorized,
    #[error("idempotency key `{0}` was used for a different request")]
    KeyReused(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("corrupt log for game `{game}` at line {line}: {message}")]
    CorruptLog { game: String, line: usize, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// JSON body of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

fn engine_code(e: &EngineError) -> &'static str {
    match e {
        EngineError::InvalidConfig { .. } => "invalid-config",
        EngineError::TooManyPlayers(_) => "too-many-players",
        EngineError::DuplicatePlayer(_) => "duplicate-player",
        EngineError::UnknownPlayer(_) => "unknown-player",
        EngineError::NotYourTurn { .. } => "not-your-turn",
        EngineError::WrongPhase { .. } => "wrong-phase",
        EngineError::WrongStatus { .. } => "wrong-status",
        EngineError::DeltaOutOfRange(_) => "delta-out-of-range",
        EngineError::UnknownEdge(_) => "unknown-edge",
        EngineError::DoubleVote(_) => "double-vote",
        EngineError::VoteNotAllowed => "vote-not-allowed",
        EngineError::NotConcluded => "not-concluded",
        EngineError::Replay { .. } => "replay",
        EngineError::Causal(_) => "causal",
        EngineError::Table(_) => "table",
        EngineError::Group(_) => "group",
        EngineError::Eval(_) => "eval",
        EngineError::Io(_) => "io",
        EngineError::Json(_) => "json",
    }
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not-found",
            ServiceError::RoleTaken(_) => "role-taken",
            ServiceError::UnknownRole(_) => "unknown-role",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::KeyReused(_) => "key-reused",
            ServiceError::BadRequest(_) => "bad-request",
            ServiceError::CorruptLog { .. } => "corrupt-log",
            ServiceError::Engine(e) => engine_code(e),
            ServiceError::Io(_) => "io",
            ServiceError::Json(_) => "json",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::RoleTaken(_) | ServiceError::KeyReused(_) => StatusCode::CONFLICT,
            ServiceError::UnknownRole(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Engine(e) => match e {
                EngineError::InvalidConfig { .. }
                | EngineError::TooManyPlayers(_)
                | EngineError::DuplicatePlayer(_)
                | EngineError::Causal(_)
                | EngineError::Table(_)
                | EngineError::Group(_)
                | EngineError::Eval(_) => StatusCode::UNPROCESSABLE_ENTITY,
                EngineError::DeltaOutOfRange(_) | EngineError::UnknownEdge(_) | EngineError::UnknownPlayer(_) => {
                    StatusCode::BAD_REQUEST
                }
                EngineError::Io(_) | EngineError::Json(_) | EngineError::Replay { .. } => {
                    StatusCode::INTERNAL_SERVER_ERROR
                }
                _ => StatusCode::CONFLICT,
            },
            ServiceError::CorruptLog { .. } | ServiceError::Io(_) | ServiceError::Json(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    pub fn body(&self) -> ErrorBody {
        let field = match self {
            ServiceError::Engine(EngineError::InvalidConfig { field, .. }) => Some(field.clone()),
            _ => None,
        };
        ErrorBody {
            error: self.code().to_string(),
            message: self.to_string(),
            field,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            log::error!("{self}");
        }
        (self.status(), Json(self.body())).into_response()
    }
}
