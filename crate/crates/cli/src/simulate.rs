use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use clinic_core::sim::{compare, simulate, SimReport, SimScenario};
use clinic_core::{ClinicError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    WalkIn,
    Appointments,
    Compare,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Patients per day.
    #[arg(long, default_value_t = 32)]
    patients: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replications for `--mode compare`; seeds run from --seed upward.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-patient waits (or per-replication means for compare) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Walk-in arrival peak, minutes after opening.
    #[arg(long)]
    peak_offset: Option<f64>,
    /// Walk-in arrival spread (standard deviation, minutes).
    #[arg(long)]
    spread: Option<f64>,
    /// Mean appointment arrival offset from slot start, minutes.
    #[arg(long)]
    jitter_mean: Option<f64>,
    /// Standard deviation of appointment arrival offset, minutes.
    #[arg(long)]
    jitter_sd: Option<f64>,
    /// Probability an appointment patient does not come.
    #[arg(long)]
    no_show_rate: Option<f64>,
}

impl SimulateArgs {
    fn apply(&self, mut s: SimScenario) -> SimScenario {
        if let Some(v) = self.peak_offset {
            s.walk_in.peak_offset_minutes = v;
        }
        if let Some(v) = self.spread {
            s.walk_in.spread_minutes = v;
        }
        if let Some(v) = self.jitter_mean {
            s.punctuality.jitter_mean_minutes = v;
        }
        if let Some(v) = self.jitter_sd {
            s.punctuality.jitter_sd_minutes = v;
        }
        if let Some(v) = self.no_show_rate {
            s.punctuality.no_show_rate = v;
        }
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn patients_csv(report: &SimReport) -> String {
    let mut out = String::from(
        "patient,slot_minute,arrival_minute,attended,service_start_minute,wait_minutes\n",
    );
    for p in &report.patients {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.patient,
            fmt_opt(p.slot_minute),
            p.arrival_minute,
            p.attended,
            fmt_opt(p.service_start_minute),
            fmt_opt(p.wait_minutes)
        );
    }
    out
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| ClinicError::InvalidConfig(format!("cannot write {}: {e}", path.display())))
}

fn emit<T: Serialize>(args: &SimulateArgs, report: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| ClinicError::Internal(format!("cannot encode report: {e}")))?;
    match &args.out {
        Some(path) => write_file(path, &(json + "\n")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

pub fn run(args: SimulateArgs) -> Result<()> {
    match args.mode {
        ModeArg::WalkIn | ModeArg::Appointments => {
            let base = if args.mode == ModeArg::WalkIn {
                SimScenario::walk_in(args.patients, args.seed)
            } else {
                SimScenario::appointments(args.patients, args.seed)
            };
            let report = simulate(&args.apply(base))?;
            if let Some(path) = &args.csv {
                write_file(path, &patients_csv(&report))?;
            }
            emit(&args, &report)
        }
        ModeArg::Compare => {
            let walk = args.apply(SimScenario::walk_in(args.patients, args.seed));
            let appt = args.apply(SimScenario::appointments(args.patients, args.seed));
            let report = compare(&walk, &appt, args.reps)?;
            if report.ci_degenerate {
                eprintln!("note: confidence interval is degenerate (fewer than two replications or no spread)");
            }
            if let Some(path) = &args.csv {
                let mut out = String::from(
                    "seed_walk_in,seed_appointments,walk_in_mean_wait,appointments_mean_wait\n",
                );
                for r in &report.replications {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        r.seed_walk_in,
                        r.seed_appointments,
                        r.walk_in_mean_wait,
                        r.appointments_mean_wait
                    );
                }
                write_file(path, &out)?;
            }
            emit(&args, &report)
        }
    }
}
