//! `clinic`: administrator command line.

mod admin;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clinic_api::ServiceConfig;
use clinic_core::{ClinicError, ErrorCode, Store};

#[derive(Debug, Parser)]
#[command(
    name = "clinic",
    version,
    about = "Clinic administration, service and simulator"
)]
struct Cli {
    /// Service configuration file (TOML).
    #[arg(long, global = true, env = "CLINIC_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Register, update and list patients.
    #[command(subcommand)]
    Patient(admin::PatientCmd),
    /// Register, update and list doctors, the pharmacist and admins.
    #[command(subcommand)]
    Doctor(admin::DoctorCmd),
    /// Assign doctors to shifts.
    #[command(subcommand)]
    Schedule(admin::ScheduleCmd),
    /// Book, move or cancel appointments on a patient's behalf.
    #[command(subcommand)]
    Appointment(admin::AppointmentCmd),
    /// Database maintenance.
    #[command(subcommand)]
    Db(admin::DbCmd),
    /// Run the HTTP service and the reminder dispatcher until interrupted.
    Serve,
    /// Walk-in vs appointment waiting-time simulator.
    Simulate(simulate::SimulateArgs),
}

/// Process exit status for each error code.
pub fn exit_status(code: ErrorCode) -> u8 {
    use ErrorCode::*;
    match code {
        Internal => 1,
        MalformedRequest | InvalidMobile | WeakPassword | MisalignedWindow | InvalidScenario
        | MismatchedScenarios => 3,
        NotFound | UnknownPatient | UnknownPractitioner => 4,
        DuplicateId | SlotTaken | NotEditable => 5,
        RejectTooSoon | RejectTooFar | MisalignedStart | NoPractitionerScheduled => 6,
        InvalidConfig => 7,
        StoreUnavailable | MigrationConflict => 8,
        GatewayFailed => 9,
        Forbidden | Unauthenticated | AuthFailed => 10,
    }
}

fn open_store(cfg: &ServiceConfig) -> clinic_core::Result<Store> {
    let store = Store::open(&cfg.store_path)?;
    store.migrate()?;
    Ok(store)
}

fn run(cli: Cli) -> clinic_core::Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate::run(args),
        command => {
            let cfg = ServiceConfig::load(cli.config.as_deref())?;
            match command {
                Command::Patient(cmd) => admin::patient(&open_store(&cfg)?, cmd),
                Command::Doctor(cmd) => admin::doctor(&open_store(&cfg)?, cmd),
                Command::Schedule(cmd) => admin::schedule(&open_store(&cfg)?, cmd),
                Command::Appointment(cmd) => admin::appointment(&open_store(&cfg)?, cmd),
                Command::Db(cmd) => admin::db(&cfg, cmd),
                Command::Serve => serve(cfg),
                Command::Simulate(_) => unreachable!(),
            }
        }
    }
}

fn serve(cfg: ServiceConfig) -> clinic_core::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let rt = tokio::runtime::Runtime::new()
        .map_err(|e| ClinicError::Internal(format!("cannot start runtime: {e}")))?;
    rt.block_on(clinic_api::serve(
        cfg,
        clinic_core::ClinicConfig::default(),
        shutdown_signal(),
    ))
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("install SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(exit_status(e.code()))
        }
    }
}
