use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// Body of every error response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("session is finished: every positive bag has been labeled")]
    Finished,

    #[error("malformed request: {0}")]
    BadRequest(String),

    #[error("labels must be -1 or 1, found {0}")]
    InvalidLabel(i64),

    #[error("event log error: {0}")]
    Log(String),

    #[error(transparent)]
    Core(#[from] mial_core::Error),
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        use mial_core::Error as E;
        match self {
            ServiceError::UnknownSession(_) | ServiceError::UnknownDataset(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::Finished => StatusCode::CONFLICT,
            ServiceError::BadRequest(_) | ServiceError::InvalidLabel(_) => StatusCode::BAD_REQUEST,
            ServiceError::Log(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Core(e) => match e {
                E::NotPending { .. } | E::AlreadyLabeled(_) => StatusCode::CONFLICT,
                E::InvalidConfig(_)
                | E::UnknownBag(_)
                | E::LengthMismatch { .. }
                | E::AssumptionViolation(_)
                | E::ImpossibleSplit(_)
                | E::NegativeFeature { .. }
                | E::SingleClass
                | E::UndefinedRatio
                | E::NoPositiveBags => StatusCode::BAD_REQUEST,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
        }
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        use mial_core::Error as E;
        match self {
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::UnknownDataset(_) => "unknown_dataset",
            ServiceError::Finished => "finished",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::InvalidLabel(_) => "invalid_label",
            ServiceError::Log(_) => "event_log",
            ServiceError::Core(e) => match e {
                E::NotPending { .. } => "not_pending",
                E::AlreadyLabeled(_) => "already_labeled",
                E::InvalidConfig(_) => "invalid_config",
                E::UnknownBag(_) => "unknown_bag",
                E::LengthMismatch { .. } => "label_count",
                E::AssumptionViolation(_) => "assumption_violation",
                E::ImpossibleSplit(_) => "impossible_split",
                E::NegativeFeature { .. } | E::SingleClass | E::UndefinedRatio | E::NoPositiveBags => {
                    "unsuitable_dataset"
                }
                _ => "internal",
            },
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code().to_string(),
            message: self.to_string(),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(self.body())).into_response()
    }
}
