use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ehr_core::explorer::ExplorerError;
use ehr_core::netconfig::NetError;
use ehr_core::txflow::{EndorseError, SubmitError};
use ehr_core::{ErrorCode, ValidationCode};
use serde_json::json;

/// Error body: `{code, message}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", message)
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "access-denied", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad-request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    /// A committed transaction that was marked invalid.
    pub fn invalidated(tx_id: &str, validity: ValidationCode) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            validity.as_str(),
            format!("transaction {tx_id} was invalidated at commit ({validity})"),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"code": self.code, "message": self.message}))).into_response()
    }
}

impl From<SubmitError> for ApiError {
    fn from(e: SubmitError) -> Self {
        match &e {
            SubmitError::Endorsement(EndorseError::Chaincode(ce)) => {
                let status = match ce.code {
                    ErrorCode::AccessDenied => StatusCode::FORBIDDEN,
                    ErrorCode::NotFound => StatusCode::NOT_FOUND,
                    ErrorCode::AlreadyExists => StatusCode::CONFLICT,
                    ErrorCode::AuthFailed => StatusCode::UNAUTHORIZED,
                    ErrorCode::Validation => StatusCode::BAD_REQUEST,
                };
                ApiError::new(status, ce.code.as_str(), ce.message.clone())
            }
            SubmitError::Endorsement(EndorseError::Identity(m)) => {
                ApiError::new(StatusCode::UNAUTHORIZED, m.code(), e.to_string())
            }
            SubmitError::QueueFull | SubmitError::Shutdown => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "unavailable", e.to_string())
            }
            _ => ApiError::internal(e.to_string()),
        }
    }
}

impl From<NetError> for ApiError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::Submit(s) => s.into(),
            NetError::Unauthorized => ApiError::unauthorized(e.to_string()),
            NetError::AlreadyExists(_) => ApiError::new(StatusCode::CONFLICT, "already-exists", e.to_string()),
            NetError::UnknownSubject(_) => ApiError::new(StatusCode::NOT_FOUND, "not-found", e.to_string()),
            NetError::Invalidated { ref validity, .. } => {
                ApiError::new(StatusCode::CONFLICT, validity.clone(), e.to_string())
            }
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<ExplorerError> for ApiError {
    fn from(e: ExplorerError) -> Self {
        match e {
            ExplorerError::NotFound(m) => ApiError::new(StatusCode::NOT_FOUND, "not-found", m),
            ExplorerError::Forbidden(m) => ApiError::forbidden(m),
        }
    }
}
