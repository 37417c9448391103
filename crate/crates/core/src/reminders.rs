//! SMS reminders: the automatic pre-appointment reminder, the doctor's bulk
//! morning reminder, and the gateway they go out through.
//!
//! Dispatch is log-then-send. The `(appointment, kind)` log row is written
//! first and acts as the claim; the gateway is only called by whoever wrote
//! it. If the gateway fails the row is retracted so a later attempt can
//! retry. A crash between the two steps loses a reminder rather than
//! duplicating one.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::config::ClinicConfig;
use crate::domain::{
    wire, Appointment, AppointmentId, AppointmentStatus, PatientRecord, Practitioner,
    PractitionerId, ReminderKind, ReminderLogEntry,
};
use crate::error::{ClinicError, Result};
use crate::store::{AppointmentFilter, NewReminder, RecordOutcome, Store};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Sent,
    Failed(String),
}

pub trait SmsGateway: Send + Sync {
    fn send(&self, mobile_number: &str, message_body: &str) -> DeliveryOutcome;
}

impl<G: SmsGateway + ?Sized> SmsGateway for Arc<G> {
    fn send(&self, mobile_number: &str, message_body: &str) -> DeliveryOutcome {
        (**self).send(mobile_number, message_body)
    }
}

/// Stub gateway: appends `timestamp|mobile|body` lines to a file and
/// always reports success.
pub struct FileSinkGateway {
    path: PathBuf,
    file: Mutex<File>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for FileSinkGateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FileSinkGateway")
            .field("path", &self.path)
            .finish()
    }
}

impl FileSinkGateway {
    pub fn open(path: impl AsRef<Path>, clock: Arc<dyn Clock>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| {
                ClinicError::InvalidConfig(format!("cannot open sms sink {}: {e}", path.display()))
            })?;
        Ok(Self {
            path,
            file: Mutex::new(file),
            clock,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl SmsGateway for FileSinkGateway {
    fn send(&self, mobile_number: &str, message_body: &str) -> DeliveryOutcome {
        let body: String = message_body
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        let line = format!(
            "{}|{}|{}\n",
            wire::format_timestamp(self.clock.now()),
            mobile_number,
            body
        );
        let mut file = self.file.lock().unwrap();
        match file.write_all(line.as_bytes()).and_then(|_| file.flush()) {
            // the stub reports success regardless; a broken sink is an ops problem
            Ok(()) | Err(_) => DeliveryOutcome::Sent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReminderMessage {
    pub appointment_id: AppointmentId,
    pub body: String,
}

/// `Dear {patient}, reminder: appointment {id} with Dr {doctor} on {date} at {HH:MM}.`
///
/// A practitioner name already starting with "Dr" is not prefixed twice.
pub fn render_message(
    appointment: &Appointment,
    patient: &PatientRecord,
    practitioner: &Practitioner,
) -> ReminderMessage {
    let name = practitioner.full_name.trim();
    let doctor = name
        .strip_prefix("Dr. ")
        .or_else(|| name.strip_prefix("Dr "))
        .unwrap_or(name);
    ReminderMessage {
        appointment_id: appointment.appointment_id.clone(),
        body: format!(
            "Dear {}, reminder: appointment {} with Dr {} on {} at {}.",
            patient.full_name.trim(),
            appointment.appointment_id,
            doctor,
            appointment.date.format("%Y-%m-%d"),
            appointment.start.format(wire::TIME_FORMAT),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DispatchOutcome {
    Sent(ReminderLogEntry),
    SkippedDuplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchFailure {
    pub appointment_id: AppointmentId,
    pub code: String,
    pub reason: String,
}

impl DispatchFailure {
    fn new(appointment_id: AppointmentId, err: &ClinicError) -> Self {
        Self {
            appointment_id,
            code: err.code().as_str().to_string(),
            reason: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulkReport {
    pub sent: Vec<ReminderLogEntry>,
    pub skipped: Vec<AppointmentId>,
    pub failed: Vec<DispatchFailure>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickReport {
    pub dispatched: usize,
    pub skipped: usize,
    pub failed: Vec<DispatchFailure>,
}

#[derive(Debug, Clone)]
pub struct Reminders {
    store: Store,
    config: ClinicConfig,
}

impl Reminders {
    pub fn new(store: Store, config: ClinicConfig) -> Self {
        Self { store, config }
    }

    pub fn message_for(&self, appointment: &Appointment) -> Result<(ReminderMessage, String)> {
        let patient = self.store.get_patient(&appointment.patient_id)?;
        let practitioner = self.store.get_practitioner(&appointment.practitioner_id)?;
        let msg = render_message(appointment, &patient, &practitioner);
        Ok((msg, patient.mobile_number))
    }

    /// BOOKED appointments with `start - lead <= now < start` and no
    /// automatic reminder logged. Anything missed during downtime stays due
    /// until the appointment starts.
    pub fn due_auto(&self, now: NaiveDateTime) -> Result<Vec<Appointment>> {
        self.store.find_unreminded(
            ReminderKind::AutoT30,
            now,
            now + self.config.reminder_lead(),
        )
    }

    pub fn dispatch(
        &self,
        appointment: &Appointment,
        kind: ReminderKind,
        gateway: &dyn SmsGateway,
        now: NaiveDateTime,
    ) -> Result<DispatchOutcome> {
        if appointment.status != AppointmentStatus::Booked {
            return Err(ClinicError::NotEditable(
                appointment.appointment_id.0.clone(),
            ));
        }
        let (msg, mobile) = self.message_for(appointment)?;
        let entry = match self.store.record_reminder(&NewReminder {
            appointment_id: appointment.appointment_id.clone(),
            kind,
            sent_at: now,
            recipient_mobile: mobile,
            message_body: msg.body,
        })? {
            RecordOutcome::Duplicate => return Ok(DispatchOutcome::SkippedDuplicate),
            RecordOutcome::Recorded(entry) => entry,
        };
        match gateway.send(&entry.recipient_mobile, &entry.message_body) {
            DeliveryOutcome::Sent => Ok(DispatchOutcome::Sent(entry)),
            DeliveryOutcome::Failed(reason) => {
                self.store.retract_reminder(entry.entry_id)?;
                Err(ClinicError::GatewayFailed(reason))
            }
        }
    }

    /// One bulk reminder per BOOKED appointment of `doctor` today that has
    /// not started yet. Safe to re-run; already reminded rows are skipped.
    pub fn bulk_today(
        &self,
        doctor: &PractitionerId,
        now: NaiveDateTime,
        gateway: &dyn SmsGateway,
    ) -> Result<BulkReport> {
        if self.store.find_practitioner(doctor)?.is_none() {
            return Err(ClinicError::UnknownPractitioner(doctor.0.clone()));
        }
        let todays = self.store.list_appointments(&AppointmentFilter {
            practitioner_id: Some(doctor.clone()),
            date: Some(now.date()),
            status: Some(AppointmentStatus::Booked),
            ..Default::default()
        })?;
        let mut report = BulkReport::default();
        for appt in todays.into_iter().filter(|a| a.starts_at() >= now) {
            match self.dispatch(&appt, ReminderKind::BulkMorning, gateway, now) {
                Ok(DispatchOutcome::Sent(entry)) => report.sent.push(entry),
                Ok(DispatchOutcome::SkippedDuplicate) => report.skipped.push(appt.appointment_id),
                Err(e) => report
                    .failed
                    .push(DispatchFailure::new(appt.appointment_id, &e)),
            }
        }
        Ok(report)
    }

    /// One sweep of the automatic reminder: dispatches everything due now.
    /// Per-appointment failures are collected, never abort the sweep.
    pub fn tick(&self, now: NaiveDateTime, gateway: &dyn SmsGateway) -> Result<TickReport> {
        let mut report = TickReport::default();
        for appt in self.due_auto(now)? {
            match self.dispatch(&appt, ReminderKind::AutoT30, gateway, now) {
                Ok(DispatchOutcome::Sent(_)) => report.dispatched += 1,
                Ok(DispatchOutcome::SkippedDuplicate) => report.skipped += 1,
                // cancelled between the scan and the claim
                Err(ClinicError::NotEditable(_)) => report.skipped += 1,
                Err(e) => report
                    .failed
                    .push(DispatchFailure::new(appt.appointment_id.clone(), &e)),
            }
        }
        Ok(report)
    }

    /// Number of reminders successfully dispatched in one sweep.
    pub fn reminder_tick(&self, now: NaiveDateTime, gateway: &dyn SmsGateway) -> Result<usize> {
        Ok(self.tick(now, gateway)?.dispatched)
    }
}
