//! Golden-file and authorization-matrix checks, shared by the `contract`
//! and `acceptance` test targets.

use std::collections::BTreeSet;
use std::path::PathBuf;

use axum::http::{Method, StatusCode};
use serde_json::{json, Value};

use clinic_api::Role;

use super::{check_envelope, error_code, fixture, Fixture, PASSWORD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Login,
    PasswordReset,
    GetPatient,
    PatientAppointments,
    NextAppointment,
    Slots,
    Book,
    Edit,
    Cancel,
    Complete,
    DoctorQueue,
    BulkReminders,
    PharmacistContact,
}

impl Endpoint {
    pub const ALL: [Endpoint; 13] = [
        Endpoint::Login,
        Endpoint::PasswordReset,
        Endpoint::GetPatient,
        Endpoint::PatientAppointments,
        Endpoint::NextAppointment,
        Endpoint::Slots,
        Endpoint::Book,
        Endpoint::Edit,
        Endpoint::Cancel,
        Endpoint::Complete,
        Endpoint::DoctorQueue,
        Endpoint::BulkReminders,
        Endpoint::PharmacistContact,
    ];
}

/// Who is calling, relative to the fixture's resources. "Own" resources are
/// P001, APT-000001 (P001 with D001) and D001's queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Caller {
    Anonymous,
    PatientOwner,
    OtherPatient,
    DoctorOwner,
    OtherDoctor,
}

impl Caller {
    pub const ALL: [Caller; 5] = [
        Caller::Anonymous,
        Caller::PatientOwner,
        Caller::OtherPatient,
        Caller::DoctorOwner,
        Caller::OtherDoctor,
    ];

    fn principal(self) -> (&'static str, Role) {
        match self {
            Caller::Anonymous | Caller::PatientOwner => ("P001", Role::Patient),
            Caller::OtherPatient => ("P002", Role::Patient),
            Caller::DoctorOwner => ("D001", Role::Doctor),
            Caller::OtherDoctor => ("D002", Role::Doctor),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Allow,
    Deny(&'static str),
}

/// The authorization matrix. Exhaustive by construction.
pub fn expected(endpoint: Endpoint, caller: Caller) -> Outcome {
    use Caller::*;
    use Endpoint::*;
    use Outcome::*;
    const UNAUTH: Outcome = Deny("UNAUTHENTICATED");
    const FORBID: Outcome = Deny("FORBIDDEN");
    match (endpoint, caller) {
        // credential-based; no token involved
        (Login | PasswordReset, _) => Allow,

        (_, Anonymous) => UNAUTH,

        (
            GetPatient | PatientAppointments | NextAppointment,
            PatientOwner | DoctorOwner | OtherDoctor,
        ) => Allow,
        (GetPatient | PatientAppointments | NextAppointment, OtherPatient) => FORBID,

        (Slots, _) => Allow,

        (Book | Edit, PatientOwner) => Allow,
        (Book | Edit, OtherPatient | DoctorOwner | OtherDoctor) => FORBID,

        (Cancel, PatientOwner | DoctorOwner) => Allow,
        (Cancel, OtherPatient | OtherDoctor) => FORBID,

        (Complete | DoctorQueue | BulkReminders, DoctorOwner) => Allow,
        (Complete | DoctorQueue | BulkReminders, PatientOwner | OtherPatient | OtherDoctor) => {
            FORBID
        }

        (PharmacistContact, DoctorOwner | OtherDoctor) => Allow,
        (PharmacistContact, PatientOwner | OtherPatient) => FORBID,
    }
}

/// The request a caller makes against the fixture's "own" resources.
fn request(endpoint: Endpoint, caller: Caller) -> (Method, String, Option<Value>) {
    let (id, role) = caller.principal();
    let role = serde_json::to_value(role).unwrap();
    let tomorrow = super::tomorrow().to_string();
    match endpoint {
        Endpoint::Login => (
            Method::POST,
            "/api/v1/login".into(),
            Some(json!({"role": role, "id": id, "password": PASSWORD})),
        ),
        Endpoint::PasswordReset => (
            Method::POST,
            "/api/v1/password-reset".into(),
            Some(
                json!({"role": role, "id": id, "old_password": PASSWORD, "new_password": "a-longer-secret"}),
            ),
        ),
        Endpoint::GetPatient => (Method::GET, "/api/v1/patients/P001".into(), None),
        Endpoint::PatientAppointments => (
            Method::GET,
            "/api/v1/patients/P001/appointments".into(),
            None,
        ),
        Endpoint::NextAppointment => (
            Method::GET,
            "/api/v1/patients/P001/appointments/next".into(),
            None,
        ),
        Endpoint::Slots => (Method::GET, format!("/api/v1/slots?date={tomorrow}"), None),
        Endpoint::Book => (
            Method::POST,
            "/api/v1/appointments".into(),
            Some(json!({"patient_id": "P001", "date": tomorrow, "start": "08:15"})),
        ),
        Endpoint::Edit => (
            Method::PATCH,
            "/api/v1/appointments/APT-000001".into(),
            Some(json!({"date": tomorrow, "start": "08:30"})),
        ),
        Endpoint::Cancel => (
            Method::POST,
            "/api/v1/appointments/APT-000001/cancel".into(),
            None,
        ),
        Endpoint::Complete => (
            Method::POST,
            "/api/v1/appointments/APT-000001/complete".into(),
            None,
        ),
        Endpoint::DoctorQueue => (
            Method::GET,
            "/api/v1/doctors/D001/queue?scope=today".into(),
            None,
        ),
        Endpoint::BulkReminders => (
            Method::POST,
            "/api/v1/doctors/D001/reminders/bulk".into(),
            None,
        ),
        Endpoint::PharmacistContact => (Method::GET, "/api/v1/pharmacist/contact".into(), None),
    }
}

/// Runs every (endpoint, caller) pair on a fresh fixture. Returns the
/// number of pairs checked and a description of each mismatch.
pub async fn run_authz_matrix() -> (usize, Vec<String>) {
    let mut failures = Vec::new();
    let mut checked = 0;
    for endpoint in Endpoint::ALL {
        for caller in Caller::ALL {
            let f = fixture();
            let token = match caller {
                Caller::Anonymous => None,
                c => {
                    let (id, role) = c.principal();
                    Some(f.token(id, role))
                }
            };
            let (method, uri, body) = request(endpoint, caller);
            let (status, resp) = f.call(method, &uri, token.as_deref(), body).await;
            checked += 1;
            if let Err(e) = check_envelope(status, &resp) {
                failures.push(format!("{endpoint:?} as {caller:?}: bad envelope: {e}"));
                continue;
            }
            let got = if resp["ok"] == json!(true) {
                Outcome::Allow
            } else {
                match error_code(&resp) {
                    Some("UNAUTHENTICATED") => Outcome::Deny("UNAUTHENTICATED"),
                    Some("FORBIDDEN") => Outcome::Deny("FORBIDDEN"),
                    other => {
                        failures.push(format!(
                            "{endpoint:?} as {caller:?}: expected {:?}, request itself failed with {other:?}",
                            expected(endpoint, caller)
                        ));
                        continue;
                    }
                }
            };
            if got != expected(endpoint, caller) {
                failures.push(format!(
                    "{endpoint:?} as {caller:?}: expected {:?}, got {got:?}",
                    expected(endpoint, caller)
                ));
            }
        }
    }
    (checked, failures)
}

struct Golden {
    dir: PathBuf,
    update: bool,
    names: BTreeSet<String>,
    covered: BTreeSet<Endpoint>,
    failures: Vec<String>,
}

fn normalize(mut body: Value) -> Value {
    if let Some(token) = body.pointer_mut("/data/token") {
        if token.is_string() {
            *token = json!("<token>");
        }
    }
    body
}

impl Golden {
    fn new() -> Self {
        Self {
            dir: PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden"),
            update: std::env::var_os("UPDATE_GOLDEN").is_some(),
            names: BTreeSet::new(),
            covered: BTreeSet::new(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, endpoint: Endpoint, (status, body): (StatusCode, Value)) {
        assert!(
            self.names.insert(name.to_string()),
            "duplicate golden case {name}"
        );
        if let Err(e) = check_envelope(status, &body) {
            self.failures.push(format!("{name}: bad envelope: {e}"));
        }
        let text = body.to_string();
        if text.contains("$argon2") || text.contains(PASSWORD) {
            self.failures
                .push(format!("{name}: credential material in response"));
        }
        if body["ok"] == json!(true) {
            self.covered.insert(endpoint);
        }
        let doc = json!({ "status": status.as_u16(), "body": normalize(body) });
        let rendered = serde_json::to_string_pretty(&doc).unwrap() + "\n";
        let path = self.dir.join(format!("{name}.json"));
        if self.update {
            std::fs::create_dir_all(&self.dir).unwrap();
            std::fs::write(&path, &rendered).unwrap();
            return;
        }
        match std::fs::read_to_string(&path) {
            Ok(expected) if expected == rendered => {}
            Ok(expected) => self.failures.push(format!(
                "{name}: response differs from {}\n--- expected\n{expected}--- actual\n{rendered}",
                path.display()
            )),
            Err(e) => self
                .failures
                .push(format!("{name}: cannot read {}: {e}", path.display())),
        }
    }
}

async fn get(f: &Fixture, uri: &str, token: &str) -> (StatusCode, Value) {
    f.call(Method::GET, uri, Some(token), None).await
}

async fn post(f: &Fixture, uri: &str, token: Option<&str>, body: Value) -> (StatusCode, Value) {
    f.call(Method::POST, uri, token, Some(body)).await
}

/// Replays the golden scenario. Returns the number of cases and failures;
/// a failure is also reported for any endpoint with no successful case.
pub async fn run_golden() -> (usize, Vec<String>) {
    use Endpoint::*;
    let mut g = Golden::new();
    let tomorrow = super::tomorrow().to_string();
    let far = (super::today() + chrono::Duration::days(31)).to_string();

    // authentication
    let f = fixture();
    g.check(
        "login_patient",
        Login,
        post(
            &f,
            "/api/v1/login",
            None,
            json!({"role": "PATIENT", "id": "P001", "password": PASSWORD}),
        )
        .await,
    );
    g.check(
        "login_doctor",
        Login,
        post(
            &f,
            "/api/v1/login",
            None,
            json!({"role": "DOCTOR", "id": "D001", "password": PASSWORD}),
        )
        .await,
    );
    let wrong = post(
        &f,
        "/api/v1/login",
        None,
        json!({"role": "PATIENT", "id": "P001", "password": "not-the-password"}),
    )
    .await;
    let unknown = post(
        &f,
        "/api/v1/login",
        None,
        json!({"role": "PATIENT", "id": "P999", "password": PASSWORD}),
    )
    .await;
    if wrong != unknown {
        g.failures
            .push("unknown id and wrong password are distinguishable".into());
    }
    g.check("login_wrong_password", Login, wrong);
    g.check("login_unknown_id", Login, unknown);
    g.check(
        "login_pharmacist_as_doctor",
        Login,
        post(
            &f,
            "/api/v1/login",
            None,
            json!({"role": "DOCTOR", "id": "PH01", "password": PASSWORD}),
        )
        .await,
    );
    g.check(
        "login_malformed",
        Login,
        post(&f, "/api/v1/login", None, json!({"role": "PATIENT"})).await,
    );

    let old = f.token("P001", Role::Patient);
    g.check("password_reset_weak", PasswordReset, post(&f, "/api/v1/password-reset", None,
        json!({"role": "PATIENT", "id": "P001", "old_password": PASSWORD, "new_password": "abcd"})).await);
    g.check("password_reset_wrong_old", PasswordReset, post(&f, "/api/v1/password-reset", None,
        json!({"role": "PATIENT", "id": "P001", "old_password": "nope-nope", "new_password": "a-longer-secret"})).await);
    g.check("password_reset", PasswordReset, post(&f, "/api/v1/password-reset", None,
        json!({"role": "PATIENT", "id": "P001", "old_password": PASSWORD, "new_password": "a-longer-secret"})).await);
    g.check(
        "password_reset_old_token_revoked",
        GetPatient,
        get(&f, "/api/v1/patients/P001", &old).await,
    );
    g.check(
        "login_after_reset_old_password",
        Login,
        post(
            &f,
            "/api/v1/login",
            None,
            json!({"role": "PATIENT", "id": "P001", "password": PASSWORD}),
        )
        .await,
    );
    g.check(
        "login_after_reset_new_password",
        Login,
        post(
            &f,
            "/api/v1/login",
            None,
            json!({"role": "PATIENT", "id": "P001", "password": "a-longer-secret"}),
        )
        .await,
    );

    // patient reads
    let f = fixture();
    let p1 = f.token("P001", Role::Patient);
    let d1 = f.token("D001", Role::Doctor);
    g.check(
        "patient_get",
        GetPatient,
        get(&f, "/api/v1/patients/P001", &p1).await,
    );
    g.check(
        "patient_get_other_forbidden",
        GetPatient,
        get(&f, "/api/v1/patients/P002", &p1).await,
    );
    g.check(
        "patient_get_unauthenticated",
        GetPatient,
        f.call(Method::GET, "/api/v1/patients/P001", None, None)
            .await,
    );
    g.check(
        "patient_get_bad_token",
        GetPatient,
        get(&f, "/api/v1/patients/P001", "deadbeef").await,
    );
    g.check(
        "doctor_get_unknown_patient",
        GetPatient,
        get(&f, "/api/v1/patients/P404", &d1).await,
    );
    g.check(
        "patient_appointments",
        PatientAppointments,
        get(&f, "/api/v1/patients/P001/appointments", &p1).await,
    );
    g.check(
        "patient_appointments_bad_flag",
        PatientAppointments,
        get(
            &f,
            "/api/v1/patients/P001/appointments?include_past=maybe",
            &p1,
        )
        .await,
    );
    g.check(
        "next_appointment",
        NextAppointment,
        get(&f, "/api/v1/patients/P001/appointments/next", &p1).await,
    );

    // availability
    g.check(
        "slots_tomorrow",
        Slots,
        get(&f, &format!("/api/v1/slots?date={tomorrow}"), &p1).await,
    );
    g.check(
        "slots_missing_date",
        Slots,
        get(&f, "/api/v1/slots", &p1).await,
    );
    g.check(
        "slots_bad_date",
        Slots,
        get(&f, "/api/v1/slots?date=05/05/2026", &p1).await,
    );
    g.check(
        "slots_unstaffed_day",
        Slots,
        get(&f, "/api/v1/slots?date=2026-05-06", &p1).await,
    );

    // booking lifecycle
    let book =
        |date: &str, start: &str| json!({"patient_id": "P001", "date": date, "start": start});
    g.check(
        "book",
        Book,
        post(
            &f,
            "/api/v1/appointments",
            Some(&p1),
            book(&tomorrow, "08:15"),
        )
        .await,
    );
    let p2 = f.token("P002", Role::Patient);
    g.check(
        "book_slot_taken",
        Book,
        post(
            &f,
            "/api/v1/appointments",
            Some(&p2),
            json!({"patient_id": "P002", "date": tomorrow, "start": "08:15"}),
        )
        .await,
    );
    g.check(
        "book_too_soon",
        Book,
        post(
            &f,
            "/api/v1/appointments",
            Some(&p1),
            book(&super::today().to_string(), "15:00"),
        )
        .await,
    );
    g.check(
        "book_too_far",
        Book,
        post(&f, "/api/v1/appointments", Some(&p1), book(&far, "08:00")).await,
    );
    g.check(
        "book_misaligned",
        Book,
        post(
            &f,
            "/api/v1/appointments",
            Some(&p1),
            book(&tomorrow, "08:10"),
        )
        .await,
    );
    g.check(
        "book_lunch",
        Book,
        post(
            &f,
            "/api/v1/appointments",
            Some(&p1),
            book(&tomorrow, "12:15"),
        )
        .await,
    );
    g.check(
        "book_unstaffed",
        Book,
        post(
            &f,
            "/api/v1/appointments",
            Some(&p1),
            book("2026-05-06", "08:00"),
        )
        .await,
    );
    g.check(
        "book_malformed",
        Book,
        post(
            &f,
            "/api/v1/appointments",
            Some(&p1),
            json!({"patient_id": "P001"}),
        )
        .await,
    );
    g.check(
        "edit",
        Edit,
        f.call(
            Method::PATCH,
            "/api/v1/appointments/APT-000003",
            Some(&p1),
            Some(json!({"date": tomorrow, "start": "13:00"})),
        )
        .await,
    );
    g.check(
        "edit_unknown",
        Edit,
        f.call(
            Method::PATCH,
            "/api/v1/appointments/APT-999999",
            Some(&p1),
            Some(json!({"date": tomorrow, "start": "13:00"})),
        )
        .await,
    );
    g.check(
        "cancel",
        Cancel,
        f.call(
            Method::POST,
            "/api/v1/appointments/APT-000003/cancel",
            Some(&p1),
            None,
        )
        .await,
    );
    g.check(
        "cancel_again",
        Cancel,
        f.call(
            Method::POST,
            "/api/v1/appointments/APT-000003/cancel",
            Some(&p1),
            None,
        )
        .await,
    );
    g.check(
        "edit_cancelled",
        Edit,
        f.call(
            Method::PATCH,
            "/api/v1/appointments/APT-000003",
            Some(&p1),
            Some(json!({"date": tomorrow, "start": "14:00"})),
        )
        .await,
    );
    g.check(
        "patient_appointments_include_past",
        PatientAppointments,
        get(
            &f,
            "/api/v1/patients/P001/appointments?include_past=true",
            &p1,
        )
        .await,
    );

    // doctor views
    g.check(
        "queue_today",
        DoctorQueue,
        get(&f, "/api/v1/doctors/D001/queue", &d1).await,
    );
    g.check(
        "queue_future",
        DoctorQueue,
        get(&f, "/api/v1/doctors/D001/queue?scope=future", &d1).await,
    );
    g.check(
        "queue_bad_scope",
        DoctorQueue,
        get(&f, "/api/v1/doctors/D001/queue?scope=yesterday", &d1).await,
    );
    g.check(
        "bulk_reminders",
        BulkReminders,
        f.call(
            Method::POST,
            "/api/v1/doctors/D001/reminders/bulk",
            Some(&d1),
            None,
        )
        .await,
    );
    g.check(
        "bulk_reminders_repeat",
        BulkReminders,
        f.call(
            Method::POST,
            "/api/v1/doctors/D001/reminders/bulk",
            Some(&d1),
            None,
        )
        .await,
    );
    g.check(
        "complete",
        Complete,
        f.call(
            Method::POST,
            "/api/v1/appointments/APT-000001/complete",
            Some(&d1),
            None,
        )
        .await,
    );
    g.check(
        "next_appointment_none",
        NextAppointment,
        get(&f, "/api/v1/patients/P001/appointments/next", &p1).await,
    );
    g.check(
        "pharmacist_contact",
        PharmacistContact,
        get(&f, "/api/v1/pharmacist/contact", &d1).await,
    );

    // routing
    g.check(
        "unknown_route",
        Slots,
        get(&f, "/api/v1/nowhere", &d1).await,
    );
    g.check(
        "wrong_method",
        Slots,
        f.call(Method::DELETE, "/api/v1/slots", Some(&d1), None)
            .await,
    );

    for endpoint in Endpoint::ALL {
        if !g.covered.contains(&endpoint) {
            g.failures
                .push(format!("{endpoint:?} has no successful golden case"));
        }
    }
    (g.names.len(), g.failures)
}
