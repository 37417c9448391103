//! `/api/v1` routes. Each handler authenticates, applies the role rules,
//! then delegates to the scheduler or reminder service on a blocking thread.

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::http::Uri;
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};
use serde_json::json;

use clinic_core::credential::{verify_or_dummy, Credential};
use clinic_core::domain::wire;
use clinic_core::store::RecordUpdate;
use clinic_core::{
    Appointment, AppointmentId, ClinicError, PatientId, PractitionerId, PractitionerRole, Principal,
};

use crate::envelope::{ok, ApiError, ApiResult};
use crate::session::{Role, Session};
use crate::AppState;

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/login", post(login))
        .route("/password-reset", post(password_reset))
        .route("/patients/{id}", get(get_patient))
        .route("/patients/{id}/appointments", get(patient_appointments))
        .route("/patients/{id}/appointments/next", get(next_appointment))
        .route("/slots", get(slots))
        .route("/appointments", post(book))
        .route("/appointments/{id}", patch(edit))
        .route("/appointments/{id}/cancel", post(cancel))
        .route("/appointments/{id}/complete", post(complete))
        .route("/doctors/{id}/queue", get(doctor_queue))
        .route("/doctors/{id}/reminders/bulk", post(bulk_reminders))
        .route("/pharmacist/contact", get(pharmacist_contact));
    Router::new()
        .nest("/api/v1", api)
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state)
}

async fn not_found(uri: Uri) -> ApiError {
    ApiError(ClinicError::NotFound {
        what: "route",
        id: uri.path().to_string(),
    })
}

async fn method_not_allowed() -> ApiError {
    ApiError(ClinicError::MalformedRequest(
        "method not allowed on this route".into(),
    ))
}

/// Bearer-token authentication.
pub struct Authed(pub Session);

impl FromRequestParts<AppState> for Authed {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, ApiError> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or(ApiError(ClinicError::Unauthenticated))?;
        state
            .sessions()
            .check(token, state.now())
            .map(Authed)
            .ok_or(ApiError(ClinicError::Unauthenticated))
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError(ClinicError::MalformedRequest(e.body_text())))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError(ClinicError::MalformedRequest(e.body_text())))
}

fn parse_date(s: &str) -> Result<NaiveDate, ApiError> {
    wire::parse_date(s).ok_or_else(|| {
        ApiError(ClinicError::MalformedRequest(format!(
            "date {s:?} is not YYYY-MM-DD"
        )))
    })
}

fn parse_time(s: &str) -> Result<NaiveTime, ApiError> {
    wire::parse_time(s).ok_or_else(|| {
        ApiError(ClinicError::MalformedRequest(format!(
            "time {s:?} is not HH:MM"
        )))
    })
}

fn forbidden() -> ApiError {
    ApiError(ClinicError::Forbidden)
}

fn require_doctor(s: &Session) -> Result<(), ApiError> {
    match s.role {
        Role::Doctor => Ok(()),
        Role::Patient => Err(forbidden()),
    }
}

/// Doctors may read any patient; patients only themselves.
fn require_patient_reader(s: &Session, patient: &str) -> Result<(), ApiError> {
    match s.role {
        Role::Doctor => Ok(()),
        Role::Patient if s.principal_id == patient => Ok(()),
        Role::Patient => Err(forbidden()),
    }
}

fn require_doctor_self(s: &Session, doctor: &str) -> Result<(), ApiError> {
    if s.role == Role::Doctor && s.principal_id == doctor {
        Ok(())
    } else {
        Err(forbidden())
    }
}

fn principal(s: &Session) -> Principal {
    match s.role {
        Role::Patient => Principal::Patient(PatientId::new(&s.principal_id)),
        Role::Doctor => Principal::Doctor(PractitionerId::new(&s.principal_id)),
    }
}

/// Appointment as sent on the wire, including its derived end time.
#[derive(Debug, Serialize)]
pub struct AppointmentView {
    #[serde(flatten)]
    pub appointment: Appointment,
    #[serde(with = "wire::hhmm")]
    pub end: NaiveTime,
}

fn view(state: &AppState, a: Appointment) -> AppointmentView {
    AppointmentView {
        end: a.end(state.scheduler().config()),
        appointment: a,
    }
}

fn views(state: &AppState, rows: Vec<Appointment>) -> Vec<AppointmentView> {
    rows.into_iter().map(|a| view(state, a)).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoginRequest {
    role: Role,
    id: String,
    password: String,
}

async fn login(
    State(state): State<AppState>,
    payload: Result<Json<LoginRequest>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    let session = state
        .blocking(move |st| {
            let (credential, display_name) = lookup_credential(st, req.role, &req.id)?;
            if !verify_or_dummy(credential.as_ref(), &req.password) {
                return Err(ClinicError::AuthFailed);
            }
            let session = st.sessions().issue(&req.id, req.role, st.now());
            Ok((session, display_name.unwrap_or_default()))
        })
        .await?;
    let (session, display_name) = session;
    Ok(ok(json!({
        "token": session.token,
        "expires_at": wire::format_timestamp(session.expires_at),
        "display_name": display_name,
        "role": session.role,
        "principal_id": session.principal_id,
    })))
}

/// Credential and display name for a login principal; `None` when the id
/// is unknown or belongs to someone who cannot log in under `role`.
fn lookup_credential(
    st: &AppState,
    role: Role,
    id: &str,
) -> clinic_core::Result<(Option<Credential>, Option<String>)> {
    let store = st.scheduler().store();
    Ok(match role {
        Role::Patient => match store.find_patient(&PatientId::new(id))? {
            Some(p) => (Some(p.credential), Some(p.full_name)),
            None => (None, None),
        },
        Role::Doctor => match store.find_practitioner(&PractitionerId::new(id))? {
            Some(p) if p.role == PractitionerRole::Doctor => {
                (Some(p.credential), Some(p.full_name))
            }
            _ => (None, None),
        },
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PasswordResetRequest {
    role: Role,
    id: String,
    old_password: String,
    new_password: String,
}

async fn password_reset(
    State(state): State<AppState>,
    payload: Result<Json<PasswordResetRequest>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    let revoked = state
        .blocking(move |st| {
            let (credential, _) = lookup_credential(st, req.role, &req.id)?;
            if !verify_or_dummy(credential.as_ref(), &req.old_password) {
                return Err(ClinicError::AuthFailed);
            }
            let update = RecordUpdate {
                credential: Some(Credential::new_password(&req.new_password)?),
                ..Default::default()
            };
            let store = st.scheduler().store();
            match req.role {
                Role::Patient => {
                    store.update_patient(&PatientId::new(&req.id), &update)?;
                }
                Role::Doctor => {
                    store.update_practitioner(&PractitionerId::new(&req.id), &update)?;
                }
            }
            Ok(st.sessions().revoke_principal(&req.id, req.role))
        })
        .await?;
    Ok(ok(
        json!({ "password_changed": true, "sessions_revoked": revoked }),
    ))
}

async fn get_patient(
    State(state): State<AppState>,
    Authed(s): Authed,
    Path(id): Path<String>,
) -> ApiResult {
    require_patient_reader(&s, &id)?;
    let who = principal(&s);
    let summary = state
        .blocking(move |st| st.scheduler().find_patient(&who, &PatientId::new(id)))
        .await?;
    Ok(ok(summary))
}

#[derive(Debug, Deserialize)]
struct HistoryQuery {
    include_past: Option<bool>,
}

async fn patient_appointments(
    State(state): State<AppState>,
    Authed(s): Authed,
    Path(id): Path<String>,
    q: Result<Query<HistoryQuery>, QueryRejection>,
) -> ApiResult {
    require_patient_reader(&s, &id)?;
    let include_past = query(q)?.include_past.unwrap_or(false);
    let rows = state
        .blocking(move |st| {
            st.scheduler()
                .patient_appointments(&PatientId::new(id), include_past, st.now())
        })
        .await?;
    Ok(ok(json!({ "appointments": views(&state, rows) })))
}

async fn next_appointment(
    State(state): State<AppState>,
    Authed(s): Authed,
    Path(id): Path<String>,
) -> ApiResult {
    require_patient_reader(&s, &id)?;
    let next = state
        .blocking(move |st| {
            st.scheduler()
                .next_appointment(&PatientId::new(id), st.now())
        })
        .await?;
    Ok(ok(json!({ "appointment": next.map(|a| view(&state, a)) })))
}

#[derive(Debug, Deserialize)]
struct SlotsQuery {
    date: String,
}

#[derive(Debug, Serialize)]
struct DoctorBrief {
    practitioner_id: PractitionerId,
    full_name: String,
}

async fn slots(
    State(state): State<AppState>,
    Authed(_s): Authed,
    q: Result<Query<SlotsQuery>, QueryRejection>,
) -> ApiResult {
    let date = parse_date(&query(q)?.date)?;
    let (slots, duty) = state
        .blocking(move |st| {
            let sched = st.scheduler();
            let slots = sched.available_slots(date, st.now().date())?;
            Ok((slots, sched.on_duty(date)?))
        })
        .await?;
    let brief = |p: Option<clinic_core::PractitionerSummary>| {
        p.map(|p| DoctorBrief {
            practitioner_id: p.practitioner_id,
            full_name: p.full_name,
        })
    };
    Ok(ok(json!({
        "date": date.to_string(),
        "on_duty": { "morning": brief(duty.morning), "afternoon": brief(duty.afternoon) },
        "slots": slots,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BookRequest {
    patient_id: String,
    date: String,
    start: String,
}

async fn book(
    State(state): State<AppState>,
    Authed(s): Authed,
    payload: Result<Json<BookRequest>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    if s.role != Role::Patient || s.principal_id != req.patient_id {
        return Err(forbidden());
    }
    let (date, start) = (parse_date(&req.date)?, parse_time(&req.start)?);
    let appt = state
        .blocking(move |st| {
            st.scheduler()
                .book(&PatientId::new(req.patient_id), date, start, st.now())
        })
        .await?;
    Ok(ok(view(&state, appt)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Edit,
    Cancel,
    Complete,
}

/// Patients may edit or cancel their own appointments; doctors may cancel
/// or complete appointments in their own queue.
fn check_appointment_access(
    s: &Session,
    a: &Appointment,
    action: Action,
) -> clinic_core::Result<()> {
    let allowed = match (s.role, action) {
        (Role::Patient, Action::Edit | Action::Cancel) => a.patient_id.as_str() == s.principal_id,
        (Role::Doctor, Action::Cancel | Action::Complete) => {
            a.practitioner_id.as_str() == s.principal_id
        }
        _ => false,
    };
    if allowed {
        Ok(())
    } else {
        Err(ClinicError::Forbidden)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EditRequest {
    date: String,
    start: String,
}

async fn edit(
    State(state): State<AppState>,
    Authed(s): Authed,
    Path(id): Path<String>,
    payload: Result<Json<EditRequest>, JsonRejection>,
) -> ApiResult {
    if s.role != Role::Patient {
        return Err(forbidden());
    }
    let req = body(payload)?;
    let (date, start) = (parse_date(&req.date)?, parse_time(&req.start)?);
    let appt = state
        .blocking(move |st| {
            let id = AppointmentId::new(id);
            let current = st.scheduler().get_appointment(&id)?;
            check_appointment_access(&s, &current, Action::Edit)?;
            st.scheduler().edit(&id, date, start, st.now())
        })
        .await?;
    Ok(ok(view(&state, appt)))
}

async fn cancel(
    State(state): State<AppState>,
    Authed(s): Authed,
    Path(id): Path<String>,
) -> ApiResult {
    let appt = state
        .blocking(move |st| {
            let id = AppointmentId::new(id);
            let current = st.scheduler().get_appointment(&id)?;
            check_appointment_access(&s, &current, Action::Cancel)?;
            st.scheduler().cancel(&id, st.now())
        })
        .await?;
    Ok(ok(view(&state, appt)))
}

async fn complete(
    State(state): State<AppState>,
    Authed(s): Authed,
    Path(id): Path<String>,
) -> ApiResult {
    require_doctor(&s)?;
    let appt = state
        .blocking(move |st| {
            let id = AppointmentId::new(id);
            let current = st.scheduler().get_appointment(&id)?;
            check_appointment_access(&s, &current, Action::Complete)?;
            st.scheduler().complete(&id, st.now())
        })
        .await?;
    Ok(ok(view(&state, appt)))
}

#[derive(Debug, Deserialize, Clone, Copy, Default)]
#[serde(rename_all = "lowercase")]
enum QueueScope {
    #[default]
    Today,
    Future,
}

#[derive(Debug, Deserialize)]
struct QueueQuery {
    scope: Option<QueueScope>,
}

async fn doctor_queue(
    State(state): State<AppState>,
    Authed(s): Authed,
    Path(id): Path<String>,
    q: Result<Query<QueueQuery>, QueryRejection>,
) -> ApiResult {
    require_doctor_self(&s, &id)?;
    let scope = query(q)?.scope.unwrap_or_default();
    let doctor = PractitionerId::new(id);
    match scope {
        QueueScope::Today => {
            let queue = state
                .blocking(move |st| st.scheduler().doctor_queue(&doctor, st.now().date()))
                .await?;
            Ok(ok(json!({
                "scope": "today",
                "date": queue.date.to_string(),
                "first_patient": queue.first_patient,
                "appointments": views(&state, queue.appointments),
            })))
        }
        QueueScope::Future => {
            let days = state
                .blocking(move |st| st.scheduler().doctor_future_queue(&doctor, st.now().date()))
                .await?;
            let days: Vec<_> = days
                .into_iter()
                .map(|d| json!({ "date": d.date.to_string(), "appointments": views(&state, d.appointments) }))
                .collect();
            Ok(ok(json!({ "scope": "future", "days": days })))
        }
    }
}

async fn bulk_reminders(
    State(state): State<AppState>,
    Authed(s): Authed,
    Path(id): Path<String>,
) -> ApiResult {
    require_doctor_self(&s, &id)?;
    let report = state
        .blocking(move |st| {
            st.reminders()
                .bulk_today(&PractitionerId::new(id), st.now(), st.gateway())
        })
        .await?;
    Ok(ok(json!({
        "sent_count": report.sent.len(),
        "skipped_count": report.skipped.len(),
        "failed_count": report.failed.len(),
        "sent": report.sent,
        "skipped": report.skipped,
        "failed": report.failed,
    })))
}

async fn pharmacist_contact(State(state): State<AppState>, Authed(s): Authed) -> ApiResult {
    require_doctor(&s)?;
    let ph = state
        .blocking(|st| st.scheduler().pharmacist_contact())
        .await?;
    Ok(ok(json!({
        "practitioner_id": ph.practitioner_id,
        "full_name": ph.full_name,
        "mobile_number": ph.mobile_number,
    })))
}
