//! Embedded SQLite storage.
//!
//! Every write runs in an `IMMEDIATE` transaction. Slot uniqueness is
//! enforced by the partial unique index `appointments_booked_slot`; the
//! application never pre-checks availability before inserting.

mod schema;

use std::path::{Path, PathBuf};
use std::time::Duration as StdDuration;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use r2d2::{Pool, PooledConnection};
use r2d2_sqlite::SqliteConnectionManager;
use rusqlite::{params, OptionalExtension, Row, Transaction, TransactionBehavior};

pub use schema::{DOMAIN_TABLES, LATEST_VERSION, SUPPORT_TABLES};

use crate::config::Shift;
use crate::credential::Credential;
use crate::domain::{
    wire, Appointment, AppointmentId, AppointmentStatus, PatientId, PatientRecord, Practitioner,
    PractitionerId, PractitionerRole, ReminderKind, ReminderLogEntry, ShiftAssignment,
};
use crate::error::{ClinicError, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";
const BUSY_TIMEOUT: StdDuration = StdDuration::from_secs(30);

type Conn = PooledConnection<SqliteConnectionManager>;

#[derive(Clone)]
pub struct Store {
    pool: Pool<SqliteConnectionManager>,
    location: Option<PathBuf>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("location", &self.location)
            .finish()
    }
}

/// Partial update; `None` leaves a column unchanged.
#[derive(Debug, Default, Clone)]
pub struct RecordUpdate {
    pub full_name: Option<String>,
    pub mobile_number: Option<String>,
    pub credential: Option<Credential>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SortOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Default)]
pub struct AppointmentFilter {
    pub patient_id: Option<PatientId>,
    pub practitioner_id: Option<PractitionerId>,
    pub date: Option<NaiveDate>,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
    pub status: Option<AppointmentStatus>,
    pub order: SortOrder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewReminder {
    pub appointment_id: AppointmentId,
    pub kind: ReminderKind,
    pub sent_at: NaiveDateTime,
    pub recipient_mobile: String,
    pub message_body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordOutcome {
    Recorded(ReminderLogEntry),
    Duplicate,
}

/// Staffing and live bookings for one date, read from a single snapshot.
#[derive(Debug, Clone, Default)]
pub struct DaySnapshot {
    pub assignments: Vec<ShiftAssignment>,
    pub booked: Vec<Appointment>,
}

fn is_unique_violation(e: &rusqlite::Error) -> bool {
    matches!(e, rusqlite::Error::SqliteFailure(f, _)
        if f.extended_code == rusqlite::ffi::SQLITE_CONSTRAINT_UNIQUE
            || f.extended_code == rusqlite::ffi::SQLITE_CONSTRAINT_PRIMARYKEY)
}

fn fmt_date(d: NaiveDate) -> String {
    d.format(DATE_FORMAT).to_string()
}

fn fmt_time(t: NaiveTime) -> String {
    t.format(wire::TIME_FORMAT).to_string()
}

fn fmt_ts(t: NaiveDateTime) -> String {
    wire::format_timestamp(t)
}

fn bad_column(col: usize, what: &str, raw: &str) -> rusqlite::Error {
    rusqlite::Error::FromSqlConversionFailure(
        col,
        rusqlite::types::Type::Text,
        format!("bad {what} {raw:?}").into(),
    )
}

fn col_date(row: &Row<'_>, idx: usize) -> rusqlite::Result<NaiveDate> {
    let raw: String = row.get(idx)?;
    NaiveDate::parse_from_str(&raw, DATE_FORMAT).map_err(|_| bad_column(idx, "date", &raw))
}

fn col_time(row: &Row<'_>, idx: usize) -> rusqlite::Result<NaiveTime> {
    let raw: String = row.get(idx)?;
    wire::parse_time(&raw).ok_or_else(|| bad_column(idx, "time", &raw))
}

fn col_ts(row: &Row<'_>, idx: usize) -> rusqlite::Result<NaiveDateTime> {
    let raw: String = row.get(idx)?;
    wire::parse_timestamp(&raw).ok_or_else(|| bad_column(idx, "timestamp", &raw))
}

const APPOINTMENT_COLS: &str =
    "appointment_id, patient_id, practitioner_id, date, start, status, created_at, updated_at";

fn appointment_from_row(row: &Row<'_>) -> rusqlite::Result<Appointment> {
    let status: String = row.get(5)?;
    Ok(Appointment {
        appointment_id: AppointmentId(row.get(0)?),
        patient_id: PatientId(row.get(1)?),
        practitioner_id: PractitionerId(row.get(2)?),
        date: col_date(row, 3)?,
        start: col_time(row, 4)?,
        status: AppointmentStatus::parse(&status)
            .ok_or_else(|| bad_column(5, "status", &status))?,
        created_at: col_ts(row, 6)?,
        updated_at: col_ts(row, 7)?,
    })
}

fn patient_from_row(row: &Row<'_>) -> rusqlite::Result<PatientRecord> {
    Ok(PatientRecord {
        patient_id: PatientId(row.get(0)?),
        full_name: row.get(1)?,
        mobile_number: row.get(2)?,
        credential: Credential::from_stored(row.get(3)?),
        created_at: col_ts(row, 4)?,
    })
}

fn practitioner_from_row(row: &Row<'_>) -> rusqlite::Result<Practitioner> {
    let role: String = row.get(2)?;
    Ok(Practitioner {
        practitioner_id: PractitionerId(row.get(0)?),
        full_name: row.get(1)?,
        role: PractitionerRole::parse(&role).ok_or_else(|| bad_column(2, "role", &role))?,
        mobile_number: row.get(3)?,
        credential: Credential::from_stored(row.get(4)?),
    })
}

fn reminder_from_row(row: &Row<'_>) -> rusqlite::Result<ReminderLogEntry> {
    let kind: String = row.get(2)?;
    Ok(ReminderLogEntry {
        entry_id: row.get(0)?,
        appointment_id: AppointmentId(row.get(1)?),
        kind: ReminderKind::parse(&kind).ok_or_else(|| bad_column(2, "kind", &kind))?,
        sent_at: col_ts(row, 3)?,
        recipient_mobile: row.get(4)?,
        message_body: row.get(5)?,
    })
}

fn shift_from_row(row: &Row<'_>) -> rusqlite::Result<ShiftAssignment> {
    let shift: String = row.get(1)?;
    Ok(ShiftAssignment {
        date: col_date(row, 0)?,
        shift: Shift::parse(&shift).ok_or_else(|| bad_column(1, "shift", &shift))?,
        practitioner_id: PractitionerId(row.get(2)?),
    })
}

fn appointment_in(tx: &rusqlite::Connection, id: &AppointmentId) -> Result<Appointment> {
    tx.query_row(
        &format!("SELECT {APPOINTMENT_COLS} FROM appointments WHERE appointment_id = ?1"),
        [id.as_str()],
        appointment_from_row,
    )
    .optional()?
    .ok_or_else(|| ClinicError::NotFound {
        what: "appointment",
        id: id.0.clone(),
    })
}

fn exists(tx: &rusqlite::Connection, sql: &str, id: &str) -> Result<bool> {
    Ok(tx.query_row(sql, [id], |_| Ok(())).optional()?.is_some())
}

impl Store {
    /// Opens (creating if needed) a single-file store. Does not migrate.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !parent.is_dir() {
                return Err(ClinicError::StoreUnavailable(format!(
                    "directory {} does not exist",
                    parent.display()
                )));
            }
        }
        let manager = SqliteConnectionManager::file(&path).with_init(|c| {
            c.busy_timeout(BUSY_TIMEOUT)?;
            c.execute_batch(
                "PRAGMA journal_mode = WAL; PRAGMA synchronous = NORMAL; PRAGMA foreign_keys = ON;",
            )
        });
        let pool = Pool::builder()
            .max_size(16)
            .min_idle(Some(1))
            .connection_timeout(StdDuration::from_secs(30))
            .build(manager)?;
        Ok(Self {
            pool,
            location: Some(path),
        })
    }

    /// Private in-memory store, mainly for tests. Uses a single connection,
    /// so every operation is serialized.
    pub fn open_in_memory() -> Result<Self> {
        let manager = SqliteConnectionManager::memory()
            .with_init(|c| c.execute_batch("PRAGMA foreign_keys = ON;"));
        // the database lives only as long as its one connection
        let pool = Pool::builder()
            .max_size(1)
            .idle_timeout(None)
            .max_lifetime(None)
            .connection_timeout(StdDuration::from_secs(60))
            .build(manager)?;
        Ok(Self {
            pool,
            location: None,
        })
    }

    pub fn location(&self) -> Option<&Path> {
        self.location.as_deref()
    }

    fn conn(&self) -> Result<Conn> {
        Ok(self.pool.get()?)
    }

    fn write<T>(&self, f: impl FnOnce(&Transaction<'_>) -> Result<T>) -> Result<T> {
        let mut conn = self.conn()?;
        let tx = conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    fn read<T>(&self, f: impl FnOnce(&Transaction<'_>) -> Result<T>) -> Result<T> {
        let mut conn = self.conn()?;
        let tx = conn.transaction_with_behavior(TransactionBehavior::Deferred)?;
        f(&tx)
    }

    /// Brings the schema to [`LATEST_VERSION`]. Idempotent.
    pub fn migrate(&self) -> Result<u32> {
        self.write(|tx| {
            let version: u32 = tx.query_row("PRAGMA user_version", [], |r| r.get(0))?;
            let mut stmt = tx.prepare(
                "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%'",
            )?;
            let tables: Vec<String> = stmt
                .query_map([], |r| r.get(0))?
                .collect::<rusqlite::Result<_>>()?;
            drop(stmt);
            let ours = |t: &String| {
                DOMAIN_TABLES.contains(&t.as_str()) || SUPPORT_TABLES.contains(&t.as_str())
            };
            match version {
                0 => {
                    if !tables.is_empty() {
                        return Err(ClinicError::MigrationConflict(format!(
                            "unversioned store already holds tables: {}",
                            tables.join(", ")
                        )));
                    }
                    tx.execute_batch(schema::V1)?;
                    tx.pragma_update(None, "user_version", LATEST_VERSION)?;
                    Ok(LATEST_VERSION)
                }
                v if v == LATEST_VERSION => {
                    let missing: Vec<_> = DOMAIN_TABLES
                        .iter()
                        .chain(SUPPORT_TABLES.iter())
                        .filter(|t| !tables.iter().any(|have| have == *t))
                        .collect();
                    if !missing.is_empty() {
                        return Err(ClinicError::MigrationConflict(format!(
                            "schema version {v} is missing tables {missing:?}"
                        )));
                    }
                    if let Some(foreign) = tables.iter().find(|t| !ours(t)) {
                        return Err(ClinicError::MigrationConflict(format!(
                            "unexpected table {foreign}"
                        )));
                    }
                    Ok(v)
                }
                v => Err(ClinicError::MigrationConflict(format!(
                    "store schema version {v} is newer than supported {LATEST_VERSION}"
                ))),
            }
        })
    }

    pub fn schema_version(&self) -> Result<u32> {
        let conn = self.conn()?;
        Ok(conn.query_row("PRAGMA user_version", [], |r| r.get(0))?)
    }

    pub fn table_names(&self) -> Result<Vec<String>> {
        let conn = self.conn()?;
        let mut stmt = conn.prepare(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name",
        )?;
        let names = stmt
            .query_map([], |r| r.get(0))?
            .collect::<rusqlite::Result<_>>()?;
        Ok(names)
    }

    // ---- patients ----

    pub fn insert_patient(&self, p: &PatientRecord) -> Result<()> {
        self.write(|tx| {
            tx.execute(
                "INSERT INTO patients (patient_id, full_name, mobile_number, credential, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5)",
                params![
                    p.patient_id.as_str(),
                    p.full_name,
                    p.mobile_number,
                    p.credential.stored_form(),
                    fmt_ts(p.created_at)
                ],
            )
            .map_err(|e| {
                if is_unique_violation(&e) {
                    ClinicError::DuplicateId(p.patient_id.0.clone())
                } else {
                    e.into()
                }
            })?;
            Ok(())
        })
    }

    pub fn update_patient(&self, id: &PatientId, update: &RecordUpdate) -> Result<PatientRecord> {
        self.write(|tx| {
            let n = tx.execute(
                "UPDATE patients SET
                    full_name = COALESCE(?2, full_name),
                    mobile_number = COALESCE(?3, mobile_number),
                    credential = COALESCE(?4, credential)
                 WHERE patient_id = ?1",
                params![
                    id.as_str(),
                    update.full_name,
                    update.mobile_number,
                    update.credential.as_ref().map(|c| c.stored_form())
                ],
            )?;
            if n == 0 {
                return Err(ClinicError::NotFound {
                    what: "patient",
                    id: id.0.clone(),
                });
            }
            Self::patient_in(tx, id)?
                .ok_or_else(|| ClinicError::Internal("patient vanished".into()))
        })
    }

    fn patient_in(tx: &rusqlite::Connection, id: &PatientId) -> Result<Option<PatientRecord>> {
        Ok(tx
            .query_row(
                "SELECT patient_id, full_name, mobile_number, credential, created_at
                 FROM patients WHERE patient_id = ?1",
                [id.as_str()],
                patient_from_row,
            )
            .optional()?)
    }

    pub fn find_patient(&self, id: &PatientId) -> Result<Option<PatientRecord>> {
        let conn = self.conn()?;
        Self::patient_in(&conn, id)
    }

    pub fn get_patient(&self, id: &PatientId) -> Result<PatientRecord> {
        self.find_patient(id)?.ok_or_else(|| ClinicError::NotFound {
            what: "patient",
            id: id.0.clone(),
        })
    }

    pub fn list_patients(&self) -> Result<Vec<PatientRecord>> {
        let conn = self.conn()?;
        let mut stmt = conn.prepare(
            "SELECT patient_id, full_name, mobile_number, credential, created_at
             FROM patients ORDER BY patient_id",
        )?;
        let rows = stmt
            .query_map([], patient_from_row)?
            .collect::<rusqlite::Result<_>>()?;
        Ok(rows)
    }

    // ---- practitioners ----

    pub fn insert_practitioner(&self, p: &Practitioner) -> Result<()> {
        self.write(|tx| {
            if p.role == PractitionerRole::Pharmacist {
                let existing: Option<String> = tx
                    .query_row(
                        "SELECT practitioner_id FROM practitioners WHERE role = 'PHARMACIST'",
                        [],
                        |r| r.get(0),
                    )
                    .optional()?;
                if let Some(other) = existing {
                    return Err(ClinicError::DuplicateId(format!(
                        "pharmacist contact already registered as {other}"
                    )));
                }
            }
            tx.execute(
                "INSERT INTO practitioners (practitioner_id, full_name, role, mobile_number, credential)
                 VALUES (?1, ?2, ?3, ?4, ?5)",
                params![
                    p.practitioner_id.as_str(),
                    p.full_name,
                    p.role.as_str(),
                    p.mobile_number,
                    p.credential.stored_form()
                ],
            )
            .map_err(|e| {
                if is_unique_violation(&e) {
                    ClinicError::DuplicateId(p.practitioner_id.0.clone())
                } else {
                    e.into()
                }
            })?;
            Ok(())
        })
    }

    pub fn update_practitioner(
        &self,
        id: &PractitionerId,
        update: &RecordUpdate,
    ) -> Result<Practitioner> {
        self.write(|tx| {
            let n = tx.execute(
                "UPDATE practitioners SET
                    full_name = COALESCE(?2, full_name),
                    mobile_number = COALESCE(?3, mobile_number),
                    credential = COALESCE(?4, credential)
                 WHERE practitioner_id = ?1",
                params![
                    id.as_str(),
                    update.full_name,
                    update.mobile_number,
                    update.credential.as_ref().map(|c| c.stored_form())
                ],
            )?;
            if n == 0 {
                return Err(ClinicError::NotFound {
                    what: "practitioner",
                    id: id.0.clone(),
                });
            }
            Self::practitioner_in(tx, id)?
                .ok_or_else(|| ClinicError::Internal("practitioner vanished".into()))
        })
    }

    fn practitioner_in(
        tx: &rusqlite::Connection,
        id: &PractitionerId,
    ) -> Result<Option<Practitioner>> {
        Ok(tx
            .query_row(
                "SELECT practitioner_id, full_name, role, mobile_number, credential
                 FROM practitioners WHERE practitioner_id = ?1",
                [id.as_str()],
                practitioner_from_row,
            )
            .optional()?)
    }

    pub fn find_practitioner(&self, id: &PractitionerId) -> Result<Option<Practitioner>> {
        let conn = self.conn()?;
        Self::practitioner_in(&conn, id)
    }

    pub fn get_practitioner(&self, id: &PractitionerId) -> Result<Practitioner> {
        self.find_practitioner(id)?
            .ok_or_else(|| ClinicError::NotFound {
                what: "practitioner",
                id: id.0.clone(),
            })
    }

    pub fn list_practitioners(&self) -> Result<Vec<Practitioner>> {
        let conn = self.conn()?;
        let mut stmt = conn.prepare(
            "SELECT practitioner_id, full_name, role, mobile_number, credential
             FROM practitioners ORDER BY practitioner_id",
        )?;
        let rows = stmt
            .query_map([], practitioner_from_row)?
            .collect::<rusqlite::Result<_>>()?;
        Ok(rows)
    }

    pub fn pharmacist(&self) -> Result<Option<Practitioner>> {
        let conn = self.conn()?;
        Ok(conn
            .query_row(
                "SELECT practitioner_id, full_name, role, mobile_number, credential
                 FROM practitioners WHERE role = 'PHARMACIST'",
                [],
                practitioner_from_row,
            )
            .optional()?)
    }

    // ---- shifts ----

    /// Upserts the `(date, shift)` assignment, returning the doctor it replaced.
    pub fn set_shift(
        &self,
        date: NaiveDate,
        shift: Shift,
        doctor: &PractitionerId,
    ) -> Result<Option<PractitionerId>> {
        self.write(|tx| {
            match Self::practitioner_in(tx, doctor)? {
                Some(p) if p.role == PractitionerRole::Doctor => {}
                Some(_) => {
                    return Err(ClinicError::NotFound {
                        what: "doctor",
                        id: doctor.0.clone(),
                    })
                }
                None => return Err(ClinicError::UnknownPractitioner(doctor.0.clone())),
            }
            let previous: Option<String> = tx
                .query_row(
                    "SELECT practitioner_id FROM shift_assignments WHERE date = ?1 AND shift = ?2",
                    params![fmt_date(date), shift.as_str()],
                    |r| r.get(0),
                )
                .optional()?;
            tx.execute(
                "INSERT INTO shift_assignments (date, shift, practitioner_id) VALUES (?1, ?2, ?3)
                 ON CONFLICT (date, shift) DO UPDATE SET practitioner_id = excluded.practitioner_id",
                params![fmt_date(date), shift.as_str(), doctor.as_str()],
            )?;
            Ok(previous.map(PractitionerId))
        })
    }

    fn shifts_in(tx: &rusqlite::Connection, date: NaiveDate) -> Result<Vec<ShiftAssignment>> {
        let mut stmt = tx.prepare(
            "SELECT date, shift, practitioner_id FROM shift_assignments WHERE date = ?1 ORDER BY shift DESC",
        )?;
        let rows = stmt
            .query_map([fmt_date(date)], shift_from_row)?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        Ok(rows)
    }

    pub fn get_shift_assignments(&self, date: NaiveDate) -> Result<Vec<ShiftAssignment>> {
        let conn = self.conn()?;
        let mut rows = Self::shifts_in(&conn, date)?;
        rows.sort_by_key(|a| a.shift);
        Ok(rows)
    }

    pub fn day_snapshot(&self, date: NaiveDate) -> Result<DaySnapshot> {
        self.read(|tx| {
            let mut assignments = Self::shifts_in(tx, date)?;
            assignments.sort_by_key(|a| a.shift);
            let booked = Self::list_in(
                tx,
                &AppointmentFilter {
                    date: Some(date),
                    status: Some(AppointmentStatus::Booked),
                    ..Default::default()
                },
            )?;
            Ok(DaySnapshot {
                assignments,
                booked,
            })
        })
    }

    // ---- appointments ----

    /// Atomically claims `(practitioner, date, start)`. Exactly one of any
    /// set of concurrent claimants succeeds; the rest get `SlotTaken`.
    pub fn claim_slot(
        &self,
        patient: &PatientId,
        practitioner: &PractitionerId,
        date: NaiveDate,
        start: NaiveTime,
        now: NaiveDateTime,
    ) -> Result<Appointment> {
        self.write(|tx| {
            if !exists(tx, "SELECT 1 FROM patients WHERE patient_id = ?1", patient.as_str())? {
                return Err(ClinicError::UnknownPatient(patient.0.clone()));
            }
            if !exists(
                tx,
                "SELECT 1 FROM practitioners WHERE practitioner_id = ?1",
                practitioner.as_str(),
            )? {
                return Err(ClinicError::UnknownPractitioner(practitioner.0.clone()));
            }
            let seq: i64 = tx.query_row(
                "UPDATE counters SET value = value + 1 WHERE name = 'appointment' RETURNING value",
                [],
                |r| r.get(0),
            )?;
            let appt = Appointment {
                appointment_id: AppointmentId::from_sequence(seq as u64),
                patient_id: patient.clone(),
                practitioner_id: practitioner.clone(),
                date,
                start,
                status: AppointmentStatus::Booked,
                created_at: now,
                updated_at: now,
            };
            tx.execute(
                &format!("INSERT INTO appointments ({APPOINTMENT_COLS}) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)"),
                params![
                    appt.appointment_id.as_str(),
                    appt.patient_id.as_str(),
                    appt.practitioner_id.as_str(),
                    fmt_date(date),
                    fmt_time(start),
                    appt.status.as_str(),
                    fmt_ts(now),
                    fmt_ts(now)
                ],
            )
            .map_err(|e| {
                if is_unique_violation(&e) {
                    ClinicError::SlotTaken
                } else {
                    e.into()
                }
            })?;
            Ok(appt)
        })
    }

    /// Moves a BOOKED appointment to a new slot in one transaction. The
    /// unique index arbitrates the target exactly as for a fresh claim; on
    /// any failure nothing changes.
    pub fn move_appointment(
        &self,
        id: &AppointmentId,
        practitioner: &PractitionerId,
        date: NaiveDate,
        start: NaiveTime,
        now: NaiveDateTime,
    ) -> Result<Appointment> {
        self.write(|tx| {
            let current = appointment_in(tx, id)?;
            if current.status != AppointmentStatus::Booked {
                return Err(ClinicError::NotEditable(id.0.clone()));
            }
            if !exists(
                tx,
                "SELECT 1 FROM practitioners WHERE practitioner_id = ?1",
                practitioner.as_str(),
            )? {
                return Err(ClinicError::UnknownPractitioner(practitioner.0.clone()));
            }
            tx.execute(
                "UPDATE appointments SET practitioner_id = ?2, date = ?3, start = ?4, updated_at = ?5
                 WHERE appointment_id = ?1 AND status = 'BOOKED'",
                params![
                    id.as_str(),
                    practitioner.as_str(),
                    fmt_date(date),
                    fmt_time(start),
                    fmt_ts(now)
                ],
            )
            .map_err(|e| {
                if is_unique_violation(&e) {
                    ClinicError::SlotTaken
                } else {
                    e.into()
                }
            })?;
            appointment_in(tx, id)
        })
    }

    /// `BOOKED -> COMPLETED | CANCELLED`. Terminal rows are never touched.
    pub fn set_status(
        &self,
        id: &AppointmentId,
        next: AppointmentStatus,
        now: NaiveDateTime,
    ) -> Result<Appointment> {
        self.write(|tx| {
            let mut appt = appointment_in(tx, id)?;
            appt.transition(next, now)?;
            tx.execute(
                "UPDATE appointments SET status = ?2, updated_at = ?3
                 WHERE appointment_id = ?1 AND status = 'BOOKED'",
                params![id.as_str(), next.as_str(), fmt_ts(now)],
            )?;
            Ok(appt)
        })
    }

    pub fn get_appointment(&self, id: &AppointmentId) -> Result<Appointment> {
        let conn = self.conn()?;
        appointment_in(&conn, id)
    }

    fn list_in(tx: &rusqlite::Connection, filter: &AppointmentFilter) -> Result<Vec<Appointment>> {
        let mut clauses = Vec::new();
        let mut args: Vec<String> = Vec::new();
        let mut push = |clause: &str, value: String| {
            args.push(value);
            clauses.push(format!("{clause} ?{}", args.len()));
        };
        if let Some(p) = &filter.patient_id {
            push("patient_id =", p.0.clone());
        }
        if let Some(p) = &filter.practitioner_id {
            push("practitioner_id =", p.0.clone());
        }
        if let Some(d) = filter.date {
            push("date =", fmt_date(d));
        }
        if let Some(d) = filter.date_from {
            push("date >=", fmt_date(d));
        }
        if let Some(d) = filter.date_to {
            push("date <=", fmt_date(d));
        }
        if let Some(s) = filter.status {
            push("status =", s.as_str().to_string());
        }
        let where_clause = if clauses.is_empty() {
            String::new()
        } else {
            format!("WHERE {}", clauses.join(" AND "))
        };
        let dir = match filter.order {
            SortOrder::Ascending => "ASC",
            SortOrder::Descending => "DESC",
        };
        let sql = format!(
            "SELECT {APPOINTMENT_COLS} FROM appointments {where_clause}
             ORDER BY date {dir}, start {dir}, appointment_id {dir}"
        );
        let mut stmt = tx.prepare(&sql)?;
        let rows = stmt
            .query_map(
                rusqlite::params_from_iter(args.iter()),
                appointment_from_row,
            )?
            .collect::<rusqlite::Result<_>>()?;
        Ok(rows)
    }

    pub fn list_appointments(&self, filter: &AppointmentFilter) -> Result<Vec<Appointment>> {
        let conn = self.conn()?;
        Self::list_in(&conn, filter)
    }

    // ---- reminder log ----

    /// Inserts a log entry unless one exists for `(appointment, kind)`.
    /// Refuses appointments that are no longer BOOKED.
    pub fn record_reminder(&self, entry: &NewReminder) -> Result<RecordOutcome> {
        self.write(|tx| {
            let appt = appointment_in(tx, &entry.appointment_id)?;
            if appt.status != AppointmentStatus::Booked {
                return Err(ClinicError::NotEditable(appt.appointment_id.0));
            }
            let res = tx.query_row(
                "INSERT INTO sms_reminder_log (appointment_id, kind, sent_at, recipient_mobile, message_body)
                 VALUES (?1, ?2, ?3, ?4, ?5) RETURNING entry_id",
                params![
                    entry.appointment_id.as_str(),
                    entry.kind.as_str(),
                    fmt_ts(entry.sent_at),
                    entry.recipient_mobile,
                    entry.message_body
                ],
                |r| r.get::<_, i64>(0),
            );
            match res {
                Ok(entry_id) => Ok(RecordOutcome::Recorded(ReminderLogEntry {
                    entry_id,
                    appointment_id: entry.appointment_id.clone(),
                    kind: entry.kind,
                    sent_at: entry.sent_at,
                    recipient_mobile: entry.recipient_mobile.clone(),
                    message_body: entry.message_body.clone(),
                })),
                Err(e) if is_unique_violation(&e) => Ok(RecordOutcome::Duplicate),
                Err(e) => Err(e.into()),
            }
        })
    }

    /// Withdraws an entry whose send failed, so the reminder can be retried.
    pub fn retract_reminder(&self, entry_id: i64) -> Result<()> {
        self.write(|tx| {
            tx.execute(
                "DELETE FROM sms_reminder_log WHERE entry_id = ?1",
                [entry_id],
            )?;
            Ok(())
        })
    }

    pub fn list_reminders(&self, kind: Option<ReminderKind>) -> Result<Vec<ReminderLogEntry>> {
        let conn = self.conn()?;
        let mut stmt = conn.prepare(
            "SELECT entry_id, appointment_id, kind, sent_at, recipient_mobile, message_body
             FROM sms_reminder_log WHERE (?1 IS NULL OR kind = ?1) ORDER BY entry_id",
        )?;
        let rows = stmt
            .query_map([kind.map(|k| k.as_str())], reminder_from_row)?
            .collect::<rusqlite::Result<_>>()?;
        Ok(rows)
    }

    /// BOOKED appointments starting in `(after, until]` with no `kind` entry.
    pub fn find_unreminded(
        &self,
        kind: ReminderKind,
        after: NaiveDateTime,
        until: NaiveDateTime,
    ) -> Result<Vec<Appointment>> {
        let conn = self.conn()?;
        let cols = APPOINTMENT_COLS
            .split(", ")
            .map(|c| format!("a.{c}"))
            .collect::<Vec<_>>()
            .join(", ");
        let mut stmt = conn.prepare(&format!(
            "SELECT {cols} FROM appointments a
             WHERE a.status = 'BOOKED'
               AND (a.date || 'T' || a.start || ':00') > ?1
               AND (a.date || 'T' || a.start || ':00') <= ?2
               AND NOT EXISTS (
                   SELECT 1 FROM sms_reminder_log l
                   WHERE l.appointment_id = a.appointment_id AND l.kind = ?3)
             ORDER BY a.date, a.start, a.appointment_id"
        ))?;
        let rows = stmt
            .query_map(
                params![fmt_ts(after), fmt_ts(until), kind.as_str()],
                appointment_from_row,
            )?
            .collect::<rusqlite::Result<_>>()?;
        Ok(rows)
    }
}
