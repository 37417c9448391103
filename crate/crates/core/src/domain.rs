//! Domain records and the pure booking rules that every other layer shares.

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::config::{ClinicConfig, Shift, TimeWindow};
use crate::credential::Credential;
use crate::error::{ClinicError, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(PatientId);
string_id!(PractitionerId);
string_id!(
    /// `APT-` followed by a zero-padded six digit sequence number.
    AppointmentId
);

impl AppointmentId {
    pub fn from_sequence(n: u64) -> Self {
        Self(format!("APT-{n:06}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PractitionerRole {
    Doctor,
    Pharmacist,
    Admin,
}

impl PractitionerRole {
    pub fn as_str(self) -> &'static str {
        match self {
            PractitionerRole::Doctor => "DOCTOR",
            PractitionerRole::Pharmacist => "PHARMACIST",
            PractitionerRole::Admin => "ADMIN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DOCTOR" => Some(PractitionerRole::Doctor),
            "PHARMACIST" => Some(PractitionerRole::Pharmacist),
            "ADMIN" => Some(PractitionerRole::Admin),
            _ => None,
        }
    }
}

/// Digits with an optional leading `+`.
pub fn validate_mobile(mobile: &str) -> Result<()> {
    let digits = mobile.strip_prefix('+').unwrap_or(mobile);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ClinicError::InvalidMobile(mobile.to_string()));
    }
    Ok(())
}

pub fn validate_id(what: &'static str, id: &str) -> Result<()> {
    if id.trim().is_empty() || id.trim() != id {
        return Err(ClinicError::MalformedRequest(format!(
            "{what} id must be non-empty without surrounding whitespace"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientRecord {
    pub patient_id: PatientId,
    pub full_name: String,
    pub mobile_number: String,
    pub credential: Credential,
    pub created_at: NaiveDateTime,
}

impl PatientRecord {
    pub fn summary(&self) -> PatientSummary {
        PatientSummary {
            patient_id: self.patient_id.clone(),
            full_name: self.full_name.clone(),
            mobile_number: self.mobile_number.clone(),
            created_at: self.created_at,
        }
    }
}

/// Patient details without credential material.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientSummary {
    pub patient_id: PatientId,
    pub full_name: String,
    pub mobile_number: String,
    #[serde(with = "wire::timestamp")]
    pub created_at: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Practitioner {
    pub practitioner_id: PractitionerId,
    pub full_name: String,
    pub role: PractitionerRole,
    pub mobile_number: String,
    pub credential: Credential,
}

impl Practitioner {
    pub fn summary(&self) -> PractitionerSummary {
        PractitionerSummary {
            practitioner_id: self.practitioner_id.clone(),
            full_name: self.full_name.clone(),
            role: self.role,
            mobile_number: self.mobile_number.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PractitionerSummary {
    pub practitioner_id: PractitionerId,
    pub full_name: String,
    pub role: PractitionerRole,
    pub mobile_number: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftAssignment {
    pub date: NaiveDate,
    pub shift: Shift,
    pub practitioner_id: PractitionerId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSlot {
    pub date: NaiveDate,
    #[serde(with = "wire::hhmm")]
    pub start: NaiveTime,
    #[serde(with = "wire::hhmm")]
    pub end: NaiveTime,
    pub shift: Shift,
    pub practitioner_id: PractitionerId,
    pub free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AppointmentStatus {
    Booked,
    Completed,
    Cancelled,
}

impl AppointmentStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AppointmentStatus::Booked => "BOOKED",
            AppointmentStatus::Completed => "COMPLETED",
            AppointmentStatus::Cancelled => "CANCELLED",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BOOKED" => Some(AppointmentStatus::Booked),
            "COMPLETED" => Some(AppointmentStatus::Completed),
            "CANCELLED" => Some(AppointmentStatus::Cancelled),
            _ => None,
        }
    }

    pub fn is_terminal(self) -> bool {
        self != AppointmentStatus::Booked
    }

    /// Only `BOOKED -> COMPLETED` and `BOOKED -> CANCELLED` are legal.
    pub fn can_transition_to(self, next: AppointmentStatus) -> bool {
        self == AppointmentStatus::Booked && next.is_terminal()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Appointment {
    pub appointment_id: AppointmentId,
    pub patient_id: PatientId,
    pub practitioner_id: PractitionerId,
    pub date: NaiveDate,
    #[serde(with = "wire::hhmm")]
    pub start: NaiveTime,
    pub status: AppointmentStatus,
    #[serde(with = "wire::timestamp")]
    pub created_at: NaiveDateTime,
    #[serde(with = "wire::timestamp")]
    pub updated_at: NaiveDateTime,
}

impl Appointment {
    pub fn starts_at(&self) -> NaiveDateTime {
        self.date.and_time(self.start)
    }

    /// Derived from the configured slot length; never stored.
    pub fn end(&self, config: &ClinicConfig) -> NaiveTime {
        self.start + config.slot_length()
    }

    /// Applies a status change, refusing anything but a move out of BOOKED.
    pub fn transition(&mut self, next: AppointmentStatus, at: NaiveDateTime) -> Result<()> {
        if !self.status.can_transition_to(next) {
            return Err(ClinicError::NotEditable(self.appointment_id.0.clone()));
        }
        self.status = next;
        self.updated_at = at;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReminderKind {
    AutoT30,
    BulkMorning,
}

impl ReminderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReminderKind::AutoT30 => "AUTO_T30",
            ReminderKind::BulkMorning => "BULK_MORNING",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "AUTO_T30" => Some(ReminderKind::AutoT30),
            "BULK_MORNING" => Some(ReminderKind::BulkMorning),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReminderLogEntry {
    pub entry_id: i64,
    pub appointment_id: AppointmentId,
    pub kind: ReminderKind,
    #[serde(with = "wire::timestamp")]
    pub sent_at: NaiveDateTime,
    pub recipient_mobile: String,
    pub message_body: String,
}

/// Outcome of checking a requested booking date against the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateVerdict {
    Accept,
    RejectTooSoon,
    RejectTooFar,
}

impl DateVerdict {
    pub fn into_result(self, config: &ClinicConfig) -> Result<()> {
        match self {
            DateVerdict::Accept => Ok(()),
            DateVerdict::RejectTooSoon => Err(ClinicError::TooSoon),
            DateVerdict::RejectTooFar => Err(ClinicError::TooFar {
                max_days: config.max_horizon_days,
            }),
        }
    }
}

/// Accepts exactly the dates in `[today + min_lead_days, today + max_horizon_days]`.
pub fn validate_booking_date(
    requested: NaiveDate,
    today: NaiveDate,
    config: &ClinicConfig,
) -> DateVerdict {
    let ahead = (requested - today).num_days();
    if ahead < config.min_lead_days {
        DateVerdict::RejectTooSoon
    } else if ahead > config.max_horizon_days {
        DateVerdict::RejectTooFar
    } else {
        DateVerdict::Accept
    }
}

/// Slot start times covering `window` back to back.
pub fn slot_grid(window: TimeWindow, slot_minutes: i64) -> Result<Vec<NaiveTime>> {
    let minutes = window.minutes();
    if slot_minutes <= 0 || minutes < 0 || minutes % slot_minutes != 0 {
        return Err(ClinicError::MisalignedWindow {
            minutes,
            slot_minutes,
        });
    }
    let step = Duration::minutes(slot_minutes);
    Ok((0..minutes / slot_minutes)
        .map(|i| window.start + step * i as i32)
        .collect())
}

/// The shift a booking at `start` falls in, provided `start` is on that
/// shift's slot grid.
pub fn aligned_shift(start: NaiveTime, config: &ClinicConfig) -> Result<Shift> {
    let misaligned = || ClinicError::MisalignedStart(start.format("%H:%M").to_string());
    if start.second() != 0 || start.nanosecond() != 0 {
        return Err(misaligned());
    }
    let shift = config.shift_at(start).ok_or_else(misaligned)?;
    let window = config.window(shift);
    let offset = (start - window.start).num_minutes();
    if offset % config.slot_minutes != 0 || start + config.slot_length() > window.end {
        return Err(misaligned());
    }
    Ok(shift)
}

/// Wire encodings: `HH:MM` times and second-resolution ISO 8601 local timestamps.
pub mod wire {
    pub const TIME_FORMAT: &str = "%H:%M";
    pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

    pub fn parse_time(s: &str) -> Option<chrono::NaiveTime> {
        chrono::NaiveTime::parse_from_str(s, TIME_FORMAT).ok()
    }

    pub fn parse_date(s: &str) -> Option<chrono::NaiveDate> {
        chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
    }

    pub fn parse_timestamp(s: &str) -> Option<chrono::NaiveDateTime> {
        chrono::NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).ok()
    }

    pub fn format_timestamp(t: chrono::NaiveDateTime) -> String {
        t.format(TIMESTAMP_FORMAT).to_string()
    }

    pub mod hhmm {
        use chrono::NaiveTime;
        use serde::{de::Error, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
            s.collect_str(&t.format(super::TIME_FORMAT))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
            let raw = String::deserialize(d)?;
            super::parse_time(&raw).ok_or_else(|| D::Error::custom("expected HH:MM"))
        }
    }

    pub mod timestamp {
        use chrono::NaiveDateTime;
        use serde::{de::Error, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(t: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
            s.collect_str(&t.format(super::TIMESTAMP_FORMAT))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
            let raw = String::deserialize(d)?;
            super::parse_timestamp(&raw)
                .ok_or_else(|| D::Error::custom("expected YYYY-MM-DDTHH:MM:SS"))
        }
    }
}
