use std::io::{BufRead, IsTerminal, Write};

use chrono::{NaiveDate, NaiveTime};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;

use clinic_api::ServiceConfig;
use clinic_core::domain::{validate_id, validate_mobile, wire};
use clinic_core::store::{AppointmentFilter, RecordUpdate};
use clinic_core::{
    Appointment, AppointmentId, AppointmentStatus, ClinicConfig, ClinicError, Clock, Credential,
    PatientId, PatientRecord, Practitioner, PractitionerId, PractitionerRole, Result, Scheduler,
    Shift, Store, SystemClock,
};

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    wire::parse_date(s).ok_or_else(|| format!("{s:?} is not a YYYY-MM-DD date"))
}

fn parse_time(s: &str) -> std::result::Result<NaiveTime, String> {
    wire::parse_time(s).ok_or_else(|| format!("{s:?} is not an HH:MM time"))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShiftArg {
    Morning,
    Afternoon,
}

impl From<ShiftArg> for Shift {
    fn from(s: ShiftArg) -> Self {
        match s {
            ShiftArg::Morning => Shift::Morning,
            ShiftArg::Afternoon => Shift::Afternoon,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoleArg {
    Doctor,
    Pharmacist,
    Admin,
}

impl From<RoleArg> for PractitionerRole {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Doctor => PractitionerRole::Doctor,
            RoleArg::Pharmacist => PractitionerRole::Pharmacist,
            RoleArg::Admin => PractitionerRole::Admin,
        }
    }
}

#[derive(Debug, Args)]
pub struct AddArgs {
    #[arg(long)]
    id: String,
    #[arg(long)]
    name: String,
    #[arg(long)]
    mobile: String,
    /// Read the initial password from stdin. Without it the account is
    /// created locked and cannot log in until a password is set.
    #[arg(long)]
    password_prompt: bool,
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    #[arg(long)]
    id: String,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    mobile: Option<String>,
    /// Read a new password from stdin.
    #[arg(long)]
    password_prompt: bool,
}

#[derive(Debug, Args)]
pub struct ReadArgs {
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
pub enum PatientCmd {
    Add(AddArgs),
    Update(UpdateArgs),
    List(ReadArgs),
    Show {
        #[arg(long)]
        id: String,
        #[command(flatten)]
        out: ReadArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum DoctorCmd {
    Add {
        #[command(flatten)]
        args: AddArgs,
        #[arg(long, value_enum, default_value = "doctor")]
        role: RoleArg,
    },
    Update(UpdateArgs),
    List(ReadArgs),
    Show {
        #[arg(long)]
        id: String,
        #[command(flatten)]
        out: ReadArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScheduleCmd {
    /// Assign (or replace) the doctor for one shift.
    Set {
        #[arg(long, value_parser = parse_date)]
        date: NaiveDate,
        #[arg(long, value_enum)]
        shift: ShiftArg,
        #[arg(long)]
        doctor: String,
    },
    Show {
        #[arg(long, value_parser = parse_date)]
        date: NaiveDate,
        #[command(flatten)]
        out: ReadArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum AppointmentCmd {
    Book {
        #[arg(long)]
        patient: String,
        #[arg(long, value_parser = parse_date)]
        date: NaiveDate,
        #[arg(long, value_parser = parse_time)]
        start: NaiveTime,
        /// Acknowledge acting at the patient's request.
        #[arg(long, required = true)]
        on_behalf: bool,
    },
    Edit {
        #[arg(long)]
        id: String,
        #[arg(long, value_parser = parse_date)]
        date: NaiveDate,
        #[arg(long, value_parser = parse_time)]
        start: NaiveTime,
        #[arg(long, required = true)]
        on_behalf: bool,
    },
    Cancel {
        #[arg(long)]
        id: String,
        #[arg(long, required = true)]
        on_behalf: bool,
    },
    List {
        #[arg(long)]
        patient: Option<String>,
        #[arg(long)]
        doctor: Option<String>,
        #[arg(long, value_parser = parse_date)]
        date: Option<NaiveDate>,
        #[command(flatten)]
        out: ReadArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum DbCmd {
    /// Create or upgrade the schema. Safe to repeat.
    Migrate,
    /// Schema version and table list.
    Status(ReadArgs),
}

fn read_password() -> Result<String> {
    let stdin = std::io::stdin();
    if stdin.is_terminal() {
        eprint!("password: ");
        let _ = std::io::stderr().flush();
    }
    let mut line = String::new();
    stdin
        .lock()
        .read_line(&mut line)
        .map_err(|e| ClinicError::MalformedRequest(format!("cannot read password: {e}")))?;
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

fn initial_credential(prompt: bool) -> Result<Credential> {
    if prompt {
        Credential::new_password(&read_password()?)
    } else {
        Credential::locked()
    }
}

fn update_from(args: &UpdateArgs) -> Result<RecordUpdate> {
    if let Some(m) = &args.mobile {
        validate_mobile(m)?;
    }
    let update = RecordUpdate {
        full_name: args.name.clone(),
        mobile_number: args.mobile.clone(),
        credential: if args.password_prompt {
            Some(Credential::new_password(&read_password()?)?)
        } else {
            None
        },
    };
    if update.full_name.is_none() && update.mobile_number.is_none() && update.credential.is_none() {
        return Err(ClinicError::MalformedRequest(
            "nothing to update: pass --name, --mobile or --password-prompt".into(),
        ));
    }
    Ok(update)
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable output")
    );
}

pub fn patient(store: &Store, cmd: PatientCmd) -> Result<()> {
    match cmd {
        PatientCmd::Add(a) => {
            validate_id("id", &a.id)?;
            validate_mobile(&a.mobile)?;
            let record = PatientRecord {
                patient_id: PatientId::new(&a.id),
                full_name: a.name,
                mobile_number: a.mobile,
                credential: initial_credential(a.password_prompt)?,
                created_at: SystemClock.now(),
            };
            store.insert_patient(&record)?;
            println!("{}", record.patient_id);
        }
        PatientCmd::Update(a) => {
            let record = store.update_patient(&PatientId::new(&a.id), &update_from(&a)?)?;
            println!("{}", record.patient_id);
        }
        PatientCmd::List(out) => {
            let rows: Vec<_> = store.list_patients()?.iter().map(|p| p.summary()).collect();
            if out.json {
                print_json(&rows);
            } else {
                for p in rows {
                    println!("{}\t{}\t{}", p.patient_id, p.full_name, p.mobile_number);
                }
            }
        }
        PatientCmd::Show { id, out } => {
            let p = store.get_patient(&PatientId::new(id))?.summary();
            if out.json {
                print_json(&p);
            } else {
                println!(
                    "{}\t{}\t{}\tregistered {}",
                    p.patient_id, p.full_name, p.mobile_number, p.created_at
                );
            }
        }
    }
    Ok(())
}

pub fn doctor(store: &Store, cmd: DoctorCmd) -> Result<()> {
    match cmd {
        DoctorCmd::Add { args: a, role } => {
            validate_id("id", &a.id)?;
            validate_mobile(&a.mobile)?;
            let record = Practitioner {
                practitioner_id: PractitionerId::new(&a.id),
                full_name: a.name,
                role: role.into(),
                mobile_number: a.mobile,
                credential: initial_credential(a.password_prompt)?,
            };
            store.insert_practitioner(&record)?;
            println!("{}", record.practitioner_id);
        }
        DoctorCmd::Update(a) => {
            let record =
                store.update_practitioner(&PractitionerId::new(&a.id), &update_from(&a)?)?;
            println!("{}", record.practitioner_id);
        }
        DoctorCmd::List(out) => {
            let rows: Vec<_> = store
                .list_practitioners()?
                .iter()
                .map(|p| p.summary())
                .collect();
            if out.json {
                print_json(&rows);
            } else {
                for p in rows {
                    println!(
                        "{}\t{}\t{}\t{}",
                        p.practitioner_id,
                        p.role.as_str(),
                        p.full_name,
                        p.mobile_number
                    );
                }
            }
        }
        DoctorCmd::Show { id, out } => {
            let p = store.get_practitioner(&PractitionerId::new(id))?.summary();
            if out.json {
                print_json(&p);
            } else {
                println!(
                    "{}\t{}\t{}\t{}",
                    p.practitioner_id,
                    p.role.as_str(),
                    p.full_name,
                    p.mobile_number
                );
            }
        }
    }
    Ok(())
}

fn scheduler(store: &Store) -> Result<Scheduler> {
    Scheduler::new(store.clone(), ClinicConfig::default())
}

pub fn schedule(store: &Store, cmd: ScheduleCmd) -> Result<()> {
    match cmd {
        ScheduleCmd::Set {
            date,
            shift,
            doctor,
        } => {
            let change = scheduler(store)?.assign_shift(
                date,
                shift.into(),
                &PractitionerId::new(&doctor),
            )?;
            let shift = Shift::from(shift);
            println!("{date} {shift} {doctor}");
            if !change.affected.is_empty() {
                let ids: Vec<_> = change.affected.iter().map(|a| a.as_str()).collect();
                eprintln!(
                    "warning: REPLACED_WITH_BOOKINGS: {} booking(s) remain with {}: {}",
                    ids.len(),
                    change.previous.as_ref().map(|p| p.as_str()).unwrap_or("?"),
                    ids.join(",")
                );
            }
        }
        ScheduleCmd::Show { date, out } => {
            let rows = store.get_shift_assignments(date)?;
            if out.json {
                print_json(&rows);
            } else {
                for a in rows {
                    println!("{}\t{}\t{}", a.date, a.shift, a.practitioner_id);
                }
            }
        }
    }
    Ok(())
}

fn audit(action: &str, a: &Appointment) {
    eprintln!(
        "audit: actor=admin action={action} appointment={} patient={}",
        a.appointment_id, a.patient_id
    );
}

fn print_appointment(a: &Appointment) {
    println!(
        "{}\t{}\t{}\t{} {}\t{}",
        a.appointment_id,
        a.patient_id,
        a.practitioner_id,
        a.date,
        a.start.format(wire::TIME_FORMAT),
        a.status.as_str()
    );
}

pub fn appointment(store: &Store, cmd: AppointmentCmd) -> Result<()> {
    let sched = scheduler(store)?;
    let now = SystemClock.now();
    match cmd {
        AppointmentCmd::Book {
            patient,
            date,
            start,
            ..
        } => {
            let a = sched.book(&PatientId::new(patient), date, start, now)?;
            audit("book", &a);
            print_appointment(&a);
        }
        AppointmentCmd::Edit {
            id, date, start, ..
        } => {
            let a = sched.edit(&AppointmentId::new(id), date, start, now)?;
            audit("edit", &a);
            print_appointment(&a);
        }
        AppointmentCmd::Cancel { id, .. } => {
            let a = sched.cancel(&AppointmentId::new(id), now)?;
            audit("cancel", &a);
            print_appointment(&a);
        }
        AppointmentCmd::List {
            patient,
            doctor,
            date,
            out,
        } => {
            let rows = store.list_appointments(&AppointmentFilter {
                patient_id: patient.map(PatientId::new),
                practitioner_id: doctor.map(PractitionerId::new),
                date,
                ..Default::default()
            })?;
            if out.json {
                print_json(&rows);
            } else {
                rows.iter().for_each(print_appointment);
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DbStatus {
    store_path: String,
    schema_version: u32,
    tables: Vec<String>,
    booked_appointments: usize,
}

pub fn db(cfg: &ServiceConfig, cmd: DbCmd) -> Result<()> {
    let store = Store::open(&cfg.store_path)?;
    match cmd {
        DbCmd::Migrate => {
            let version = store.migrate()?;
            println!("schema version {version}");
        }
        DbCmd::Status(out) => {
            let schema_version = store.schema_version()?;
            let booked_appointments = if schema_version == 0 {
                0
            } else {
                store
                    .list_appointments(&AppointmentFilter {
                        status: Some(AppointmentStatus::Booked),
                        ..Default::default()
                    })?
                    .len()
            };
            let status = DbStatus {
                store_path: cfg.store_path.display().to_string(),
                schema_version,
                tables: store.table_names()?,
                booked_appointments,
            };
            if out.json {
                print_json(&status);
            } else {
                println!("store {}", status.store_path);
                println!("schema version {}", status.schema_version);
                println!("tables {}", status.tables.join(","));
                println!("booked appointments {}", status.booked_appointments);
            }
        }
    }
    Ok(())
}
