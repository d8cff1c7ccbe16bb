use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ras_core::model::Violation;
use ras_core::RasError;
use serde::Serialize;

/// Error body: `{code, message}`, plus the violation list for rejected
/// configurations.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody { code: code.to_string(), message: message.into(), violations: Vec::new() },
        }
    }
}

pub fn status_of(err: &RasError) -> StatusCode {
    use RasError::*;
    match err {
        FileNotFound(_) | ExperimentNotFound(_) => StatusCode::NOT_FOUND,
        FileExists(_) | Sequence(_) | NotReady(_) | NothingToConsolidate => StatusCode::CONFLICT,
        InvalidConfig(_) | EmptyPool | BadRange { .. } | UnknownService(_) | UnroutableIp(_) => {
            StatusCode::UNPROCESSABLE_ENTITY
        }
        BadIp(_) | BadName(_) | NoCapacities | BadWeight | ZeroWeight => StatusCode::BAD_REQUEST,
        ZoneTable(_) | Io(_) | Json(_) | Csv(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<RasError> for ApiError {
    fn from(err: RasError) -> Self {
        let violations = match &err {
            RasError::InvalidConfig(v) => v.clone(),
            _ => Vec::new(),
        };
        ApiError {
            status: status_of(&err),
            body: ErrorBody { code: err.code().to_string(), message: err.to_string(), violations },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
