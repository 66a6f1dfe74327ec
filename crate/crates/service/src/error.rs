use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

use crate::protocol::ErrorFrame;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("UnknownCase: no case named {0:?}")]
    UnknownCase(String),
    #[error("UnknownSession: no session {0:?}")]
    UnknownSession(String),
    #[error("ResourceExhausted: {0} sessions already live")]
    ResourceExhausted(usize),
    #[error("SessionClosed: session {0:?} has finished")]
    SessionClosed(String),
    #[error("StreamTaken: session {0:?} already had its stream")]
    StreamTaken(String),
    #[error("MalformedMessage: {0}")]
    MalformedMessage(String),
    #[error(transparent)]
    Core(#[from] drillguide::Error),
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnknownCase(_) => "UnknownCase",
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::ResourceExhausted(_) => "ResourceExhausted",
            ServiceError::SessionClosed(_) => "SessionClosed",
            ServiceError::StreamTaken(_) => "StreamTaken",
            ServiceError::MalformedMessage(_) => "MalformedMessage",
            ServiceError::Core(_) => "Internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownCase(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::ResourceExhausted(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::SessionClosed(_) | ServiceError::StreamTaken(_) => StatusCode::CONFLICT,
            ServiceError::MalformedMessage(_) => StatusCode::BAD_REQUEST,
            ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn frame(&self) -> ErrorFrame {
        ErrorFrame {
            error: self.kind().to_string(),
            detail: self.to_string(),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.frame())).into_response()
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;
