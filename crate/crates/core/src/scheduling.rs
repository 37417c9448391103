//! Slot availability and the appointment lifecycle on top of [`Store`].

use std::collections::{BTreeMap, HashSet};

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::config::{ClinicConfig, Shift};
use crate::domain::{
    aligned_shift, slot_grid, validate_booking_date, wire, Appointment, AppointmentId,
    AppointmentStatus, PatientId, PatientSummary, PractitionerId, PractitionerRole,
    PractitionerSummary, TimeSlot,
};
use crate::error::{ClinicError, Result};
use crate::store::{AppointmentFilter, Store};

/// Who is asking. Used for read authorization on patient records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Principal {
    Patient(PatientId),
    Doctor(PractitionerId),
    Admin,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnDuty {
    pub morning: Option<PractitionerSummary>,
    pub afternoon: Option<PractitionerSummary>,
}

/// The first patient to be seen, shown to the doctor as an alert.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueAlert {
    pub appointment_id: AppointmentId,
    pub patient_id: PatientId,
    pub patient_name: String,
    pub date: NaiveDate,
    #[serde(with = "wire::hhmm")]
    pub start: NaiveTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoctorQueue {
    pub date: NaiveDate,
    pub first_patient: Option<QueueAlert>,
    pub appointments: Vec<Appointment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayQueue {
    pub date: NaiveDate,
    pub appointments: Vec<Appointment>,
}

/// Result of (re)assigning a shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftChange {
    pub previous: Option<PractitionerId>,
    /// BOOKED appointments still pointing at the outgoing doctor.
    pub affected: Vec<AppointmentId>,
}

#[derive(Debug, Clone)]
pub struct Scheduler {
    store: Store,
    config: ClinicConfig,
}

impl Scheduler {
    pub fn new(store: Store, config: ClinicConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { store, config })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn config(&self) -> &ClinicConfig {
        &self.config
    }

    /// All slots of the staffed shifts on `date`, with `free` reflecting
    /// current BOOKED appointments.
    pub fn day_slots(&self, date: NaiveDate) -> Result<Vec<TimeSlot>> {
        let snap = self.store.day_snapshot(date)?;
        let taken: HashSet<(&PractitionerId, NaiveTime)> = snap
            .booked
            .iter()
            .map(|a| (&a.practitioner_id, a.start))
            .collect();
        let mut slots = Vec::with_capacity(self.config.slots_per_day());
        for assignment in &snap.assignments {
            for start in slot_grid(
                self.config.window(assignment.shift),
                self.config.slot_minutes,
            )? {
                slots.push(TimeSlot {
                    date,
                    start,
                    end: start + self.config.slot_length(),
                    shift: assignment.shift,
                    practitioner_id: assignment.practitioner_id.clone(),
                    free: !taken.contains(&(&assignment.practitioner_id, start)),
                });
            }
        }
        slots.sort_by_key(|s| s.start);
        Ok(slots)
    }

    pub fn available_slots(&self, date: NaiveDate, today: NaiveDate) -> Result<Vec<TimeSlot>> {
        validate_booking_date(date, today, &self.config).into_result(&self.config)?;
        let mut slots = self.day_slots(date)?;
        slots.retain(|s| s.free);
        Ok(slots)
    }

    /// Resolves the doctor covering `start` on `date` after the horizon and
    /// grid checks every booking or move must pass.
    fn bookable_target(
        &self,
        date: NaiveDate,
        start: NaiveTime,
        today: NaiveDate,
    ) -> Result<PractitionerId> {
        validate_booking_date(date, today, &self.config).into_result(&self.config)?;
        let shift = aligned_shift(start, &self.config)?;
        self.store
            .get_shift_assignments(date)?
            .into_iter()
            .find(|a| a.shift == shift)
            .map(|a| a.practitioner_id)
            .ok_or_else(|| ClinicError::NoPractitionerScheduled {
                date: date.to_string(),
                shift: shift.to_string(),
            })
    }

    pub fn book(
        &self,
        patient: &PatientId,
        date: NaiveDate,
        start: NaiveTime,
        now: NaiveDateTime,
    ) -> Result<Appointment> {
        let doctor = self.bookable_target(date, start, now.date())?;
        self.store.claim_slot(patient, &doctor, date, start, now)
    }

    /// Moves a BOOKED appointment, keeping its id. On failure the original
    /// row and all availability are untouched.
    pub fn edit(
        &self,
        id: &AppointmentId,
        date: NaiveDate,
        start: NaiveTime,
        now: NaiveDateTime,
    ) -> Result<Appointment> {
        let current = self.store.get_appointment(id)?;
        if current.status != AppointmentStatus::Booked {
            return Err(ClinicError::NotEditable(id.0.clone()));
        }
        let doctor = self.bookable_target(date, start, now.date())?;
        self.store.move_appointment(id, &doctor, date, start, now)
    }

    pub fn cancel(&self, id: &AppointmentId, now: NaiveDateTime) -> Result<Appointment> {
        self.store.set_status(id, AppointmentStatus::Cancelled, now)
    }

    pub fn complete(&self, id: &AppointmentId, now: NaiveDateTime) -> Result<Appointment> {
        self.store.set_status(id, AppointmentStatus::Completed, now)
    }

    pub fn get_appointment(&self, id: &AppointmentId) -> Result<Appointment> {
        self.store.get_appointment(id)
    }

    fn require_patient(&self, patient: &PatientId) -> Result<()> {
        match self.store.find_patient(patient)? {
            Some(_) => Ok(()),
            None => Err(ClinicError::UnknownPatient(patient.0.clone())),
        }
    }

    /// Nearest first. Without `include_past` only upcoming BOOKED rows.
    pub fn patient_appointments(
        &self,
        patient: &PatientId,
        include_past: bool,
        now: NaiveDateTime,
    ) -> Result<Vec<Appointment>> {
        self.require_patient(patient)?;
        let mut filter = AppointmentFilter {
            patient_id: Some(patient.clone()),
            ..Default::default()
        };
        if !include_past {
            filter.status = Some(AppointmentStatus::Booked);
            filter.date_from = Some(now.date());
        }
        let mut rows = self.store.list_appointments(&filter)?;
        if !include_past {
            rows.retain(|a| a.starts_at() >= now);
        }
        Ok(rows)
    }

    pub fn next_appointment(
        &self,
        patient: &PatientId,
        now: NaiveDateTime,
    ) -> Result<Option<Appointment>> {
        Ok(self
            .patient_appointments(patient, false, now)?
            .into_iter()
            .next())
    }

    fn require_practitioner(&self, id: &PractitionerId) -> Result<()> {
        match self.store.find_practitioner(id)? {
            Some(_) => Ok(()),
            None => Err(ClinicError::UnknownPractitioner(id.0.clone())),
        }
    }

    /// BOOKED appointments for one doctor on one date, earliest first.
    pub fn doctor_queue(&self, doctor: &PractitionerId, date: NaiveDate) -> Result<DoctorQueue> {
        self.require_practitioner(doctor)?;
        let appointments = self.store.list_appointments(&AppointmentFilter {
            practitioner_id: Some(doctor.clone()),
            date: Some(date),
            status: Some(AppointmentStatus::Booked),
            ..Default::default()
        })?;
        let first_patient = match appointments.first() {
            Some(a) => {
                let patient = self.store.get_patient(&a.patient_id)?;
                Some(QueueAlert {
                    appointment_id: a.appointment_id.clone(),
                    patient_id: a.patient_id.clone(),
                    patient_name: patient.full_name,
                    date: a.date,
                    start: a.start,
                })
            }
            None => None,
        };
        Ok(DoctorQueue {
            date,
            first_patient,
            appointments,
        })
    }

    /// BOOKED appointments on dates after `today`, grouped by date.
    pub fn doctor_future_queue(
        &self,
        doctor: &PractitionerId,
        today: NaiveDate,
    ) -> Result<Vec<DayQueue>> {
        self.require_practitioner(doctor)?;
        let rows = self.store.list_appointments(&AppointmentFilter {
            practitioner_id: Some(doctor.clone()),
            date_from: today.succ_opt(),
            status: Some(AppointmentStatus::Booked),
            ..Default::default()
        })?;
        let mut by_date: BTreeMap<NaiveDate, Vec<Appointment>> = BTreeMap::new();
        for a in rows {
            by_date.entry(a.date).or_default().push(a);
        }
        Ok(by_date
            .into_iter()
            .map(|(date, appointments)| DayQueue { date, appointments })
            .collect())
    }

    pub fn on_duty(&self, date: NaiveDate) -> Result<OnDuty> {
        let mut duty = OnDuty::default();
        for a in self.store.get_shift_assignments(date)? {
            let summary = self.store.get_practitioner(&a.practitioner_id)?.summary();
            match a.shift {
                Shift::Morning => duty.morning = Some(summary),
                Shift::Afternoon => duty.afternoon = Some(summary),
            }
        }
        Ok(duty)
    }

    /// Read-only patient lookup. Patients may only see themselves; an
    /// unauthorized lookup is refused before existence is revealed.
    pub fn find_patient(&self, caller: &Principal, id: &PatientId) -> Result<PatientSummary> {
        match caller {
            Principal::Patient(me) if me != id => return Err(ClinicError::Forbidden),
            _ => {}
        }
        Ok(self.store.get_patient(id)?.summary())
    }

    pub fn pharmacist_contact(&self) -> Result<PractitionerSummary> {
        self.store
            .pharmacist()?
            .map(|p| p.summary())
            .ok_or_else(|| ClinicError::NotFound {
                what: "pharmacist",
                id: "contact".into(),
            })
    }

    /// Upserts a shift assignment. Existing bookings stay with the doctor
    /// they were made for and are reported back.
    pub fn assign_shift(
        &self,
        date: NaiveDate,
        shift: Shift,
        doctor: &PractitionerId,
    ) -> Result<ShiftChange> {
        match self.store.find_practitioner(doctor)? {
            Some(p) if p.role == PractitionerRole::Doctor => {}
            _ => {
                return Err(ClinicError::NotFound {
                    what: "doctor",
                    id: doctor.0.clone(),
                })
            }
        }
        let previous = self.store.set_shift(date, shift, doctor)?;
        let affected = match &previous {
            Some(prev) if prev != doctor => {
                let window = self.config.window(shift);
                self.store
                    .list_appointments(&AppointmentFilter {
                        practitioner_id: Some(prev.clone()),
                        date: Some(date),
                        status: Some(AppointmentStatus::Booked),
                        ..Default::default()
                    })?
                    .into_iter()
                    .filter(|a| window.contains(a.start))
                    .map(|a| a.appointment_id)
                    .collect()
            }
            _ => Vec::new(),
        };
        Ok(ShiftChange { previous, affected })
    }
}
