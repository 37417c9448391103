#![allow(dead_code)]

pub mod contract;

use std::sync::{Arc, Mutex, OnceLock};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use clinic_api::{router, AppState, Role};
use clinic_core::reminders::DeliveryOutcome;
use clinic_core::{
    ClinicConfig, Clock, Credential, ManualClock, PatientId, PatientRecord, Practitioner,
    PractitionerId, PractitionerRole, Shift, SmsGateway, Store,
};

pub const PASSWORD: &str = "correct-horse";

pub fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(2026, 5, 4).unwrap()
}

pub fn tomorrow() -> NaiveDate {
    today().succ_opt().unwrap()
}

pub fn opening() -> NaiveDateTime {
    today().and_hms_opt(7, 30, 0).unwrap()
}

pub fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).unwrap()
}

/// Hashing is slow; every fixture principal shares one credential.
pub fn credential() -> Credential {
    static CRED: OnceLock<Credential> = OnceLock::new();
    CRED.get_or_init(|| Credential::hash(PASSWORD).unwrap())
        .clone()
}

#[derive(Default)]
pub struct RecordingGateway {
    pub sent: Mutex<Vec<(String, String)>>,
}

impl SmsGateway for RecordingGateway {
    fn send(&self, mobile_number: &str, message_body: &str) -> DeliveryOutcome {
        self.sent
            .lock()
            .unwrap()
            .push((mobile_number.to_string(), message_body.to_string()));
        DeliveryOutcome::Sent
    }
}

pub struct Fixture {
    pub state: AppState,
    pub app: Router,
    pub clock: Arc<ManualClock>,
    pub gateway: Arc<RecordingGateway>,
    pub store: Store,
}

/// Two patients, two doctors, a pharmacist and an admin. Both days are
/// fully staffed (D001 mornings, D002 afternoons). APT-000001 is P001 with
/// D001 today at 09:00; APT-000002 is P002 with D001 tomorrow at 08:00.
pub fn fixture() -> Fixture {
    fixture_on(Store::open_in_memory().unwrap())
}

pub fn fixture_on(store: Store) -> Fixture {
    store.migrate().unwrap();
    seed(&store);
    let clock = Arc::new(ManualClock::new(opening()));
    let gateway = Arc::new(RecordingGateway::default());
    let state = AppState::new(
        store.clone(),
        ClinicConfig::default(),
        clock.clone(),
        gateway.clone(),
        Duration::hours(12),
    )
    .unwrap();
    Fixture {
        app: router(state.clone()),
        state,
        clock,
        gateway,
        store,
    }
}

fn seed(store: &Store) {
    let created = opening() - Duration::days(10);
    for (id, name, mobile) in [
        ("P001", "Alice Tan", "+6590000001"),
        ("P002", "Bob Lim", "+6590000002"),
    ] {
        store
            .insert_patient(&PatientRecord {
                patient_id: PatientId::new(id),
                full_name: name.into(),
                mobile_number: mobile.into(),
                credential: credential(),
                created_at: created,
            })
            .unwrap();
    }
    for (id, name, role, mobile) in [
        (
            "D001",
            "Dr Nina Chen",
            PractitionerRole::Doctor,
            "+6581000001",
        ),
        (
            "D002",
            "Dr Omar Rao",
            PractitionerRole::Doctor,
            "+6581000002",
        ),
        (
            "PH01",
            "Grace Ong",
            PractitionerRole::Pharmacist,
            "+6582000001",
        ),
        (
            "A001",
            "Clinic Admin",
            PractitionerRole::Admin,
            "+6583000001",
        ),
    ] {
        store
            .insert_practitioner(&Practitioner {
                practitioner_id: PractitionerId::new(id),
                full_name: name.into(),
                role,
                mobile_number: mobile.into(),
                credential: credential(),
            })
            .unwrap();
    }
    for date in [today(), tomorrow()] {
        store
            .set_shift(date, Shift::Morning, &PractitionerId::new("D001"))
            .unwrap();
        store
            .set_shift(date, Shift::Afternoon, &PractitionerId::new("D002"))
            .unwrap();
    }
    store
        .claim_slot(
            &PatientId::new("P001"),
            &PractitionerId::new("D001"),
            today(),
            hm(9, 0),
            created,
        )
        .unwrap();
    store
        .claim_slot(
            &PatientId::new("P002"),
            &PractitionerId::new("D001"),
            tomorrow(),
            hm(8, 0),
            created,
        )
        .unwrap();
}

impl Fixture {
    /// A session issued directly, skipping the password hash check.
    pub fn token(&self, id: &str, role: Role) -> String {
        self.state
            .sessions()
            .issue(id, role, self.clock.now())
            .token
    }

    pub async fn call(
        &self,
        method: Method,
        uri: &str,
        token: Option<&str>,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        call(&self.app, method, uri, token, body).await
    }
}

pub async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    token: Option<&str>,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|e| {
        panic!(
            "non-JSON body for {uri}: {e}: {:?}",
            String::from_utf8_lossy(&bytes)
        )
    });
    (status, value)
}

/// The envelope contract: exactly one of data/error populated, a status
/// consistent with `ok`, and an error code from the published list.
pub fn check_envelope(status: StatusCode, body: &Value) -> Result<(), String> {
    let obj = body.as_object().ok_or("body is not an object")?;
    let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    if keys != ["data", "error", "ok"] {
        return Err(format!("envelope keys {keys:?}"));
    }
    match body["ok"].as_bool() {
        Some(true) => {
            if !body["error"].is_null() || body["data"].is_null() {
                return Err("ok=true must carry data and no error".into());
            }
            if status != StatusCode::OK {
                return Err(format!("ok=true with status {status}"));
            }
        }
        Some(false) => {
            if !body["data"].is_null() {
                return Err("ok=false must carry no data".into());
            }
            let code = body["error"]["code"].as_str().ok_or("error.code missing")?;
            body["error"]["message"]
                .as_str()
                .ok_or("error.message missing")?;
            let known = clinic_core::ErrorCode::ALL
                .iter()
                .find(|c| c.as_str() == code);
            let known = known.ok_or_else(|| format!("unpublished code {code}"))?;
            if clinic_api::status_for(*known) != status {
                return Err(format!("{code} sent with status {status}"));
            }
        }
        None => return Err("ok is not a bool".into()),
    }
    Ok(())
}

pub fn error_code(body: &Value) -> Option<&str> {
    body["error"]["code"].as_str()
}
