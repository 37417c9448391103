//! `{"ok", "data", "error"}` response envelope and error-code to HTTP
//! status mapping.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};

use clinic_core::{ClinicError, ErrorCode};

pub fn status_for(code: ErrorCode) -> StatusCode {
    use ErrorCode::*;
    match code {
        MalformedRequest | InvalidMobile | MisalignedWindow | InvalidScenario
        | MismatchedScenarios => StatusCode::BAD_REQUEST,
        Unauthenticated | AuthFailed => StatusCode::UNAUTHORIZED,
        Forbidden => StatusCode::FORBIDDEN,
        NotFound | UnknownPatient | UnknownPractitioner => StatusCode::NOT_FOUND,
        SlotTaken | NotEditable | DuplicateId => StatusCode::CONFLICT,
        RejectTooSoon | RejectTooFar | MisalignedStart | NoPractitionerScheduled | WeakPassword => {
            StatusCode::UNPROCESSABLE_ENTITY
        }
        GatewayFailed => StatusCode::BAD_GATEWAY,
        StoreUnavailable => StatusCode::SERVICE_UNAVAILABLE,
        InvalidConfig | MigrationConflict | Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// An error on its way to the wire.
#[derive(Debug)]
pub struct ApiError(pub ClinicError);

impl From<ClinicError> for ApiError {
    fn from(e: ClinicError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = self.0.code();
        let message = match code {
            // storage and internal details stay in the server log
            ErrorCode::Internal | ErrorCode::StoreUnavailable | ErrorCode::MigrationConflict => {
                tracing::error!(error = %self.0, "request failed");
                "the service could not complete the request".to_string()
            }
            _ => self.0.to_string(),
        };
        let body = json!({
            "ok": false,
            "data": Value::Null,
            "error": { "code": code.as_str(), "message": message },
        });
        (status_for(code), Json(body)).into_response()
    }
}

pub fn ok<T: Serialize>(data: T) -> Response {
    let body = json!({ "ok": true, "data": data, "error": Value::Null });
    (StatusCode::OK, Json(body)).into_response()
}

pub type ApiResult = Result<Response, ApiError>;
