use serde::{Deserialize, Serialize};

/// Closed set of machine-readable error codes. The same strings are used on
/// the wire, on the CLI's stderr, and in `docs/api.md`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    RejectTooSoon,
    RejectTooFar,
    MisalignedWindow,
    MisalignedStart,
    NoPractitionerScheduled,
    SlotTaken,
    UnknownPatient,
    UnknownPractitioner,
    NotFound,
    NotEditable,
    Forbidden,
    Unauthenticated,
    AuthFailed,
    WeakPassword,
    MalformedRequest,
    DuplicateId,
    InvalidMobile,
    InvalidConfig,
    GatewayFailed,
    StoreUnavailable,
    MigrationConflict,
    InvalidScenario,
    MismatchedScenarios,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 24] = [
        ErrorCode::RejectTooSoon,
        ErrorCode::RejectTooFar,
        ErrorCode::MisalignedWindow,
        ErrorCode::MisalignedStart,
        ErrorCode::NoPractitionerScheduled,
        ErrorCode::SlotTaken,
        ErrorCode::UnknownPatient,
        ErrorCode::UnknownPractitioner,
        ErrorCode::NotFound,
        ErrorCode::NotEditable,
        ErrorCode::Forbidden,
        ErrorCode::Unauthenticated,
        ErrorCode::AuthFailed,
        ErrorCode::WeakPassword,
        ErrorCode::MalformedRequest,
        ErrorCode::DuplicateId,
        ErrorCode::InvalidMobile,
        ErrorCode::InvalidConfig,
        ErrorCode::GatewayFailed,
        ErrorCode::StoreUnavailable,
        ErrorCode::MigrationConflict,
        ErrorCode::InvalidScenario,
        ErrorCode::MismatchedScenarios,
        ErrorCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::RejectTooSoon => "REJECT_TOO_SOON",
            ErrorCode::RejectTooFar => "REJECT_TOO_FAR",
            ErrorCode::MisalignedWindow => "MISALIGNED_WINDOW",
            ErrorCode::MisalignedStart => "MISALIGNED_START",
            ErrorCode::NoPractitionerScheduled => "NO_PRACTITIONER_SCHEDULED",
            ErrorCode::SlotTaken => "SLOT_TAKEN",
            ErrorCode::UnknownPatient => "UNKNOWN_PATIENT",
            ErrorCode::UnknownPractitioner => "UNKNOWN_PRACTITIONER",
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::NotEditable => "NOT_EDITABLE",
            ErrorCode::Forbidden => "FORBIDDEN",
            ErrorCode::Unauthenticated => "UNAUTHENTICATED",
            ErrorCode::AuthFailed => "AUTH_FAILED",
            ErrorCode::WeakPassword => "WEAK_PASSWORD",
            ErrorCode::MalformedRequest => "MALFORMED_REQUEST",
            ErrorCode::DuplicateId => "DUPLICATE_ID",
            ErrorCode::InvalidMobile => "INVALID_MOBILE",
            ErrorCode::InvalidConfig => "INVALID_CONFIG",
            ErrorCode::GatewayFailed => "GATEWAY_FAILED",
            ErrorCode::StoreUnavailable => "STORE_UNAVAILABLE",
            ErrorCode::MigrationConflict => "MIGRATION_CONFLICT",
            ErrorCode::InvalidScenario => "INVALID_SCENARIO",
            ErrorCode::MismatchedScenarios => "MISMATCHED_SCENARIOS",
            ErrorCode::Internal => "INTERNAL",
        }
    }
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClinicError {
    #[error("bookings open from the day after today")]
    TooSoon,
    #[error("bookings can be made at most {max_days} days ahead")]
    TooFar { max_days: i64 },
    #[error("window of {minutes} minutes is not a multiple of {slot_minutes}-minute slots")]
    MisalignedWindow { minutes: i64, slot_minutes: i64 },
    #[error("{0} is not the start of a consultation slot")]
    MisalignedStart(String),
    #[error("no doctor is scheduled for {date} {shift}")]
    NoPractitionerScheduled { date: String, shift: String },
    #[error("that time slot has already been booked")]
    SlotTaken,
    #[error("unknown patient {0}")]
    UnknownPatient(String),
    #[error("unknown practitioner {0}")]
    UnknownPractitioner(String),
    #[error("{what} {id} not found")]
    NotFound { what: &'static str, id: String },
    #[error("appointment {0} is no longer booked and cannot be changed")]
    NotEditable(String),
    #[error("not allowed")]
    Forbidden,
    #[error("login required")]
    Unauthenticated,
    #[error("invalid id or password")]
    AuthFailed,
    #[error("password must be at least {min} characters")]
    WeakPassword { min: usize },
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("id {0} already exists")]
    DuplicateId(String),
    #[error("invalid mobile number {0:?}")]
    InvalidMobile(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sms gateway failed: {0}")]
    GatewayFailed(String),
    #[error("store unavailable: {0}")]
    StoreUnavailable(String),
    #[error("store holds an incompatible schema: {0}")]
    MigrationConflict(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenarios cannot be compared: {0}")]
    MismatchedScenarios(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ClinicError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ClinicError::TooSoon => ErrorCode::RejectTooSoon,
            ClinicError::TooFar { .. } => ErrorCode::RejectTooFar,
            ClinicError::MisalignedWindow { .. } => ErrorCode::MisalignedWindow,
            ClinicError::MisalignedStart(_) => ErrorCode::MisalignedStart,
            ClinicError::NoPractitionerScheduled { .. } => ErrorCode::NoPractitionerScheduled,
            ClinicError::SlotTaken => ErrorCode::SlotTaken,
            ClinicError::UnknownPatient(_) => ErrorCode::UnknownPatient,
            ClinicError::UnknownPractitioner(_) => ErrorCode::UnknownPractitioner,
            ClinicError::NotFound { .. } => ErrorCode::NotFound,
            ClinicError::NotEditable(_) => ErrorCode::NotEditable,
            ClinicError::Forbidden => ErrorCode::Forbidden,
            ClinicError::Unauthenticated => ErrorCode::Unauthenticated,
            ClinicError::AuthFailed => ErrorCode::AuthFailed,
            ClinicError::WeakPassword { .. } => ErrorCode::WeakPassword,
            ClinicError::MalformedRequest(_) => ErrorCode::MalformedRequest,
            ClinicError::DuplicateId(_) => ErrorCode::DuplicateId,
            ClinicError::InvalidMobile(_) => ErrorCode::InvalidMobile,
            ClinicError::InvalidConfig(_) => ErrorCode::InvalidConfig,
            ClinicError::GatewayFailed(_) => ErrorCode::GatewayFailed,
            ClinicError::StoreUnavailable(_) => ErrorCode::StoreUnavailable,
            ClinicError::MigrationConflict(_) => ErrorCode::MigrationConflict,
            ClinicError::InvalidScenario(_) => ErrorCode::InvalidScenario,
            ClinicError::MismatchedScenarios(_) => ErrorCode::MismatchedScenarios,
            ClinicError::Internal(_) => ErrorCode::Internal,
        }
    }
}

impl From<rusqlite::Error> for ClinicError {
    fn from(e: rusqlite::Error) -> Self {
        match e {
            rusqlite::Error::SqliteFailure(ref f, _)
                if matches!(
                    f.code,
                    rusqlite::ErrorCode::DatabaseBusy
                        | rusqlite::ErrorCode::DatabaseLocked
                        | rusqlite::ErrorCode::CannotOpen
                        | rusqlite::ErrorCode::NotADatabase
                ) =>
            {
                ClinicError::StoreUnavailable(e.to_string())
            }
            other => ClinicError::Internal(other.to_string()),
        }
    }
}

impl From<r2d2::Error> for ClinicError {
    fn from(e: r2d2::Error) -> Self {
        ClinicError::StoreUnavailable(e.to_string())
    }
}

pub type Result<T, E = ClinicError> = std::result::Result<T, E>;
