//! Versioned relational schema.

pub const LATEST_VERSION: u32 = 1;

/// The five domain tables. `counters` holds the appointment sequence.
pub const DOMAIN_TABLES: [&str; 5] = [
    "patients",
    "practitioners",
    "shift_assignments",
    "appointments",
    "sms_reminder_log",
];

pub const SUPPORT_TABLES: [&str; 1] = ["counters"];

pub const V1: &str = r#"
CREATE TABLE patients (
    patient_id    TEXT PRIMARY KEY NOT NULL CHECK (length(patient_id) > 0),
    full_name     TEXT NOT NULL,
    mobile_number TEXT NOT NULL CHECK (length(mobile_number) > 0),
    credential    TEXT NOT NULL,
    created_at    TEXT NOT NULL
);

CREATE TABLE practitioners (
    practitioner_id TEXT PRIMARY KEY NOT NULL CHECK (length(practitioner_id) > 0),
    full_name       TEXT NOT NULL,
    role            TEXT NOT NULL CHECK (role IN ('DOCTOR', 'PHARMACIST', 'ADMIN')),
    mobile_number   TEXT NOT NULL CHECK (length(mobile_number) > 0),
    credential      TEXT NOT NULL
);

-- one pharmacist contact at a time
CREATE UNIQUE INDEX practitioners_single_pharmacist
    ON practitioners (role) WHERE role = 'PHARMACIST';

CREATE TABLE shift_assignments (
    date            TEXT NOT NULL,
    shift           TEXT NOT NULL CHECK (shift IN ('MORNING', 'AFTERNOON')),
    practitioner_id TEXT NOT NULL REFERENCES practitioners (practitioner_id),
    PRIMARY KEY (date, shift)
);

CREATE TRIGGER shift_assignments_doctor_only_insert
BEFORE INSERT ON shift_assignments
WHEN (SELECT role FROM practitioners WHERE practitioner_id = NEW.practitioner_id) IS NOT 'DOCTOR'
BEGIN
    SELECT RAISE(ABORT, 'shift assignment must reference a doctor');
END;

CREATE TRIGGER shift_assignments_doctor_only_update
BEFORE UPDATE ON shift_assignments
WHEN (SELECT role FROM practitioners WHERE practitioner_id = NEW.practitioner_id) IS NOT 'DOCTOR'
BEGIN
    SELECT RAISE(ABORT, 'shift assignment must reference a doctor');
END;

CREATE TABLE appointments (
    appointment_id  TEXT PRIMARY KEY NOT NULL,
    patient_id      TEXT NOT NULL REFERENCES patients (patient_id),
    practitioner_id TEXT NOT NULL REFERENCES practitioners (practitioner_id),
    date            TEXT NOT NULL,
    start           TEXT NOT NULL,
    status          TEXT NOT NULL CHECK (status IN ('BOOKED', 'COMPLETED', 'CANCELLED')),
    created_at      TEXT NOT NULL,
    updated_at      TEXT NOT NULL
);

CREATE UNIQUE INDEX appointments_booked_slot
    ON appointments (practitioner_id, date, start) WHERE status = 'BOOKED';
CREATE INDEX appointments_patient ON appointments (patient_id, date, start);
CREATE INDEX appointments_date ON appointments (date, start);

CREATE TRIGGER appointments_never_deleted
BEFORE DELETE ON appointments
BEGIN
    SELECT RAISE(ABORT, 'appointments are retained permanently');
END;

CREATE TRIGGER appointments_terminal_immutable
BEFORE UPDATE ON appointments
WHEN OLD.status <> 'BOOKED'
BEGIN
    SELECT RAISE(ABORT, 'completed or cancelled appointments are immutable');
END;

CREATE TABLE sms_reminder_log (
    entry_id         INTEGER PRIMARY KEY AUTOINCREMENT,
    appointment_id   TEXT NOT NULL REFERENCES appointments (appointment_id),
    kind             TEXT NOT NULL CHECK (kind IN ('AUTO_T30', 'BULK_MORNING')),
    sent_at          TEXT NOT NULL,
    recipient_mobile TEXT NOT NULL,
    message_body     TEXT NOT NULL,
    UNIQUE (appointment_id, kind)
);

CREATE TABLE counters (
    name  TEXT PRIMARY KEY NOT NULL,
    value INTEGER NOT NULL
);

INSERT INTO counters (name, value) VALUES ('appointment', 0);
"#;
