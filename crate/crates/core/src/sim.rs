//! Single-doctor clinic-day simulator: walk-in FIFO versus booked slots.
//!
//! All queueing happens on an "open-time" axis measured in minutes since
//! the morning shift opens, with the lunch hour cut out. A consultation
//! that would straddle lunch is suspended over it, and a patient arriving
//! during lunch is placed at the afternoon opening. Waits are therefore
//! clinic-open minutes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::ClinicConfig;
use crate::error::{ClinicError, Result};

/// Half-normal spread (minutes) that puts 70% of walk-ins inside the first
/// clinic hour when the peak is at opening: 60 / z(0.85).
pub const DEFAULT_WALK_IN_SPREAD_MINUTES: f64 = 57.89;
pub const DEFAULT_JITTER_SD_MINUTES: f64 = 5.0;
pub const DEFAULT_NO_SHOW_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SimMode {
    WalkIn,
    Appointments,
}

/// Walk-in arrivals: normal around `peak_offset_minutes` after opening,
/// truncated to the clinic day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkInArrivals {
    pub peak_offset_minutes: f64,
    pub spread_minutes: f64,
}

impl Default for WalkInArrivals {
    fn default() -> Self {
        Self {
            peak_offset_minutes: 0.0,
            spread_minutes: DEFAULT_WALK_IN_SPREAD_MINUTES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Punctuality {
    pub jitter_mean_minutes: f64,
    pub jitter_sd_minutes: f64,
    pub no_show_rate: f64,
}

impl Default for Punctuality {
    fn default() -> Self {
        Self {
            jitter_mean_minutes: 0.0,
            jitter_sd_minutes: DEFAULT_JITTER_SD_MINUTES,
            no_show_rate: DEFAULT_NO_SHOW_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub mode: SimMode,
    pub n_patients: usize,
    pub walk_in: WalkInArrivals,
    pub punctuality: Punctuality,
    pub service_minutes: i64,
    pub seed: u64,
}

impl SimScenario {
    pub fn walk_in(n_patients: usize, seed: u64) -> Self {
        Self {
            mode: SimMode::WalkIn,
            n_patients,
            walk_in: WalkInArrivals::default(),
            punctuality: Punctuality::default(),
            service_minutes: ClinicConfig::default().slot_minutes,
            seed,
        }
    }

    pub fn appointments(n_patients: usize, seed: u64) -> Self {
        Self {
            mode: SimMode::Appointments,
            ..Self::walk_in(n_patients, seed)
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientOutcome {
    pub patient: usize,
    /// Booked slot start, minutes after opening (APPOINTMENTS only).
    pub slot_minute: Option<f64>,
    /// Wall-clock arrival, minutes after opening.
    pub arrival_minute: f64,
    pub attended: bool,
    /// Wall-clock consultation start, minutes after opening.
    pub service_start_minute: Option<f64>,
    pub wait_minutes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: SimMode,
    pub seed: u64,
    pub n_patients: usize,
    pub served: usize,
    pub no_shows: usize,
    /// Waits of attending patients in service order.
    pub waits: Vec<f64>,
    pub mean_wait: Option<f64>,
    pub median_wait: Option<f64>,
    pub p90_wait: Option<f64>,
    pub max_wait: Option<f64>,
    pub doctor_idle_minutes: f64,
    pub patients: Vec<PatientOutcome>,
}

/// Maps the open-time axis onto clinic wall-clock minutes and back.
#[derive(Debug, Clone, Copy)]
struct Day {
    morning: f64,
    lunch: f64,
    day_end: f64,
}

impl Day {
    fn new(cfg: &ClinicConfig) -> Self {
        Self {
            morning: cfg.morning_window.minutes() as f64,
            lunch: (cfg.afternoon_window.start - cfg.morning_window.end).num_minutes() as f64,
            day_end: (cfg.afternoon_window.end - cfg.morning_window.start).num_minutes() as f64,
        }
    }

    fn open_minutes(&self) -> f64 {
        self.day_end - self.lunch
    }

    fn clock_to_open(&self, c: f64) -> f64 {
        if c <= 0.0 {
            0.0
        } else if c < self.morning {
            c
        } else if c < self.morning + self.lunch {
            self.morning
        } else {
            c - self.lunch
        }
    }

    fn open_to_clock(&self, t: f64) -> f64 {
        if t < self.morning {
            t
        } else {
            t + self.lunch
        }
    }
}

fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    // nearest rank
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ClinicError::InvalidScenario(format!(
            "{name} must be finite"
        )))
    }
}

pub fn validate(scenario: &SimScenario, cfg: &ClinicConfig) -> Result<()> {
    let bad = |m: String| Err(ClinicError::InvalidScenario(m));
    if scenario.service_minutes != cfg.slot_minutes {
        return bad(format!(
            "service_minutes {} must equal the {}-minute slot length",
            scenario.service_minutes, cfg.slot_minutes
        ));
    }
    let w = scenario.walk_in;
    let p = scenario.punctuality;
    check_finite("peak_offset_minutes", w.peak_offset_minutes)?;
    check_finite("spread_minutes", w.spread_minutes)?;
    check_finite("jitter_mean_minutes", p.jitter_mean_minutes)?;
    check_finite("jitter_sd_minutes", p.jitter_sd_minutes)?;
    let day_end = Day::new(cfg).day_end;
    if w.peak_offset_minutes < 0.0 || w.peak_offset_minutes >= day_end {
        return bad("walk-in peak must fall inside the clinic day".into());
    }
    if w.spread_minutes < 0.0 || p.jitter_sd_minutes < 0.0 {
        return bad("spreads must be non-negative".into());
    }
    if !(0.0..=1.0).contains(&p.no_show_rate) {
        return bad("no_show_rate must be a probability".into());
    }
    if scenario.mode == SimMode::Appointments && scenario.n_patients > cfg.slots_per_day() {
        return bad(format!(
            "{} patients do not fit in {} daily slots",
            scenario.n_patients,
            cfg.slots_per_day()
        ));
    }
    Ok(())
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn walk_in_arrival(rng: &mut ChaCha8Rng, w: WalkInArrivals, day_end: f64) -> f64 {
    if w.spread_minutes == 0.0 {
        return w.peak_offset_minutes;
    }
    for _ in 0..1000 {
        let x = w.peak_offset_minutes + w.spread_minutes * standard_normal(rng);
        if (0.0..day_end).contains(&x) {
            return x;
        }
    }
    w.peak_offset_minutes
}

pub fn simulate(scenario: &SimScenario) -> Result<SimReport> {
    simulate_with(scenario, &ClinicConfig::default())
}

pub fn simulate_with(scenario: &SimScenario, cfg: &ClinicConfig) -> Result<SimReport> {
    validate(scenario, cfg)?;
    let day = Day::new(cfg);
    let service = scenario.service_minutes as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    // (patient, slot, clock arrival, attended) in service order
    let mut queue: Vec<(usize, Option<f64>, f64, bool)> = match scenario.mode {
        SimMode::WalkIn => {
            let mut arrivals: Vec<f64> = (0..scenario.n_patients)
                .map(|_| walk_in_arrival(&mut rng, scenario.walk_in, day.day_end))
                .collect();
            arrivals.sort_by(|a, b| a.total_cmp(b));
            arrivals
                .into_iter()
                .enumerate()
                .map(|(i, a)| (i, None, a, true))
                .collect()
        }
        SimMode::Appointments => {
            let p = scenario.punctuality;
            (0..scenario.n_patients)
                .map(|i| {
                    // fixed draw order per patient keeps runs comparable across no-show rates
                    let z = standard_normal(&mut rng);
                    let u: f64 = rng.random();
                    let slot = day.open_to_clock(i as f64 * service);
                    let arrival = slot + p.jitter_mean_minutes + p.jitter_sd_minutes * z;
                    (i, Some(slot), arrival, u >= p.no_show_rate)
                })
                .collect()
        }
    };

    let mut free_at = 0.0_f64;
    let mut busy_open = 0.0_f64;
    let mut waits = Vec::new();
    let mut patients = Vec::with_capacity(queue.len());
    for (patient, slot, arrival, attended) in queue.drain(..) {
        if !attended {
            patients.push(PatientOutcome {
                patient,
                slot_minute: slot,
                arrival_minute: arrival,
                attended,
                service_start_minute: None,
                wait_minutes: None,
            });
            continue;
        }
        let arrival_open = day.clock_to_open(arrival);
        let slot_open = slot.map(|s| day.clock_to_open(s)).unwrap_or(0.0);
        let start = arrival_open.max(slot_open).max(free_at);
        let end = start + service;
        busy_open += (end.min(day.open_minutes()) - start.min(day.open_minutes())).max(0.0);
        free_at = end;
        let wait = start - arrival_open;
        waits.push(wait);
        patients.push(PatientOutcome {
            patient,
            slot_minute: slot,
            arrival_minute: arrival,
            attended,
            service_start_minute: Some(day.open_to_clock(start)),
            wait_minutes: Some(wait),
        });
    }

    let served = waits.len();
    let mut sorted = waits.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mean_wait = (!waits.is_empty()).then(|| waits.iter().sum::<f64>() / served as f64);
    Ok(SimReport {
        mode: scenario.mode,
        seed: scenario.seed,
        n_patients: scenario.n_patients,
        served,
        no_shows: scenario.n_patients - served,
        mean_wait,
        median_wait: percentile(&sorted, 0.5),
        p90_wait: percentile(&sorted, 0.9),
        max_wait: sorted.last().copied(),
        waits,
        doctor_idle_minutes: day.open_minutes() - busy_open,
        patients,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub seed_walk_in: u64,
    pub seed_appointments: u64,
    pub walk_in_mean_wait: f64,
    pub appointments_mean_wait: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_replications: usize,
    pub n_patients: usize,
    pub walk_in_mean_wait: f64,
    pub appointments_mean_wait: f64,
    /// Mean walk-in wait over mean appointment wait; `null` in JSON when the
    /// appointment side never waits but walk-ins do.
    pub mean_wait_ratio: f64,
    pub confidence: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Set when the interval collapses to the point estimate (one replication).
    pub ci_degenerate: bool,
    pub replications: Vec<Replication>,
}

pub const COMPARE_CONFIDENCE: f64 = 0.95;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Paired replications over seeds `seed, seed + 1, ...` of each scenario.
/// The interval is a delta-method interval for the ratio of means.
pub fn compare(
    walk_in: &SimScenario,
    appointments: &SimScenario,
    n_replications: usize,
) -> Result<ComparisonReport> {
    if walk_in.n_patients != appointments.n_patients {
        return Err(ClinicError::MismatchedScenarios(format!(
            "n_patients differ ({} vs {})",
            walk_in.n_patients, appointments.n_patients
        )));
    }
    if walk_in.service_minutes != appointments.service_minutes {
        return Err(ClinicError::MismatchedScenarios(
            "service_minutes differ".into(),
        ));
    }
    if n_replications == 0 {
        return Err(ClinicError::InvalidScenario(
            "need at least one replication".into(),
        ));
    }
    let mut replications = Vec::with_capacity(n_replications);
    for r in 0..n_replications as u64 {
        let a = simulate(&walk_in.with_seed(walk_in.seed.wrapping_add(r)))?;
        let b = simulate(&appointments.with_seed(appointments.seed.wrapping_add(r)))?;
        replications.push(Replication {
            seed_walk_in: a.seed,
            seed_appointments: b.seed,
            walk_in_mean_wait: a.mean_wait.unwrap_or(0.0),
            appointments_mean_wait: b.mean_wait.unwrap_or(0.0),
        });
    }
    let xs: Vec<f64> = replications.iter().map(|r| r.walk_in_mean_wait).collect();
    let ys: Vec<f64> = replications
        .iter()
        .map(|r| r.appointments_mean_wait)
        .collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let ratio = if mx == my {
        1.0
    } else if my == 0.0 {
        f64::INFINITY
    } else {
        mx / my
    };

    let n = n_replications as f64;
    let (ci_low, ci_high, degenerate) = if n_replications == 1 {
        (Some(ratio), Some(ratio), true)
    } else if my == 0.0 {
        (None, None, false)
    } else {
        let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        let cov = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / (n - 1.0);
        let (vx, vy) = (var(&xs, mx), var(&ys, my));
        let var_ratio =
            (vx / my.powi(2) + mx.powi(2) * vy / my.powi(4) - 2.0 * mx * cov / my.powi(3)) / n;
        let t = StudentsT::new(0.0, 1.0, n - 1.0)
            .map_err(|e| ClinicError::Internal(e.to_string()))?
            .inverse_cdf(0.5 + COMPARE_CONFIDENCE / 2.0);
        let half = t * var_ratio.max(0.0).sqrt();
        (Some(ratio - half), Some(ratio + half), false)
    };

    Ok(ComparisonReport {
        n_replications,
        n_patients: walk_in.n_patients,
        walk_in_mean_wait: mx,
        appointments_mean_wait: my,
        mean_wait_ratio: ratio,
        confidence: COMPARE_CONFIDENCE,
        ci_low,
        ci_high,
        ci_degenerate: degenerate,
        replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::Normal;

    fn punctual(n: usize) -> SimScenario {
        let mut s = SimScenario::appointments(n, 7);
        s.punctuality = Punctuality {
            jitter_mean_minutes: 0.0,
            jitter_sd_minutes: 0.0,
            no_show_rate: 0.0,
        };
        s
    }

    fn all_at_opening(n: usize) -> SimScenario {
        let mut s = SimScenario::walk_in(n, 1);
        s.walk_in = WalkInArrivals {
            peak_offset_minutes: 0.0,
            spread_minutes: 0.0,
        };
        s
    }

    #[test]
    fn default_spread_matches_seventy_percent() {
        let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.85);
        assert!((60.0 / z - DEFAULT_WALK_IN_SPREAD_MINUTES).abs() < 0.01);

        let mut early = 0usize;
        let mut total = 0usize;
        for seed in 0..200 {
            let r = simulate(&SimScenario::walk_in(32, seed)).unwrap();
            early += r
                .patients
                .iter()
                .filter(|p| p.arrival_minute < 60.0)
                .count();
            total += r.patients.len();
        }
        let share = early as f64 / total as f64;
        assert!((share - 0.70).abs() < 0.02, "share {share}");
    }

    #[test]
    fn perfect_schedule_never_waits() {
        let r = simulate(&punctual(32)).unwrap();
        assert_eq!(r.served, 32);
        assert!(r.waits.iter().all(|w| *w == 0.0));
        assert_eq!(r.doctor_idle_minutes, 0.0);
        assert_eq!(r.max_wait, Some(0.0));
    }

    #[test]
    fn partial_schedule_idles_for_empty_slots() {
        let r = simulate(&punctual(20)).unwrap();
        assert_eq!(r.doctor_idle_minutes, 12.0 * 15.0);
    }

    #[test]
    fn walk_in_all_at_opening() {
        let r = simulate(&all_at_opening(32)).unwrap();
        let expected: Vec<f64> = (0..32).map(|i| 15.0 * i as f64).collect();
        assert_eq!(r.waits, expected);
        assert_eq!(r.max_wait, Some(465.0));
        assert_eq!(r.doctor_idle_minutes, 0.0);
        // the 17th patient starts at 13:00 on the wall clock
        assert_eq!(r.patients[16].service_start_minute, Some(300.0));
    }

    #[test]
    fn empty_day() {
        for s in [SimScenario::walk_in(0, 3), SimScenario::appointments(0, 3)] {
            let r = simulate(&s).unwrap();
            assert_eq!(r.served, 0);
            assert!(r.waits.is_empty() && r.patients.is_empty());
            assert_eq!(r.mean_wait, None);
        }
    }

    #[test]
    fn invalid_scenarios() {
        let mut s = SimScenario::appointments(10, 1);
        s.punctuality.no_show_rate = 1.5;
        assert!(matches!(simulate(&s), Err(ClinicError::InvalidScenario(_))));
        let mut s = SimScenario::walk_in(10, 1);
        s.service_minutes = 20;
        assert!(simulate(&s).is_err());
        assert!(simulate(&SimScenario::appointments(33, 1)).is_err());
        let mut s = SimScenario::walk_in(10, 1);
        s.walk_in.spread_minutes = f64::NAN;
        assert!(simulate(&s).is_err());
    }

    #[test]
    fn percentiles() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.5), Some(5.0));
        assert_eq!(percentile(&v, 0.9), Some(9.0));
        assert_eq!(percentile(&[], 0.5), None);
    }

    #[test]
    fn compare_identical_is_one() {
        let s = SimScenario::walk_in(32, 11);
        let c = compare(&s, &s, 5).unwrap();
        assert_eq!(c.mean_wait_ratio, 1.0);
        let p = punctual(32);
        assert_eq!(compare(&p, &p, 3).unwrap().mean_wait_ratio, 1.0);
    }

    #[test]
    fn compare_single_replication_degenerates() {
        let c = compare(
            &SimScenario::walk_in(32, 1),
            &SimScenario::appointments(32, 1),
            1,
        )
        .unwrap();
        assert!(c.ci_degenerate);
        assert_eq!(c.ci_low, Some(c.mean_wait_ratio));
        assert_eq!(c.ci_high, Some(c.mean_wait_ratio));
    }

    #[test]
    fn compare_rejects_mismatch() {
        assert!(matches!(
            compare(
                &SimScenario::walk_in(32, 1),
                &SimScenario::appointments(30, 1),
                3
            ),
            Err(ClinicError::MismatchedScenarios(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn deterministic_per_seed(seed in any::<u64>(), n in 0usize..=32, appt in any::<bool>()) {
            let s = if appt { SimScenario::appointments(n, seed) } else { SimScenario::walk_in(n, seed) };
            prop_assert_eq!(simulate(&s).unwrap(), simulate(&s).unwrap());
        }

        #[test]
        fn conservation_and_bounds(seed in any::<u64>(), n in 0usize..=32, rate in 0.0f64..=1.0) {
            let mut s = SimScenario::appointments(n, seed);
            s.punctuality.no_show_rate = rate;
            let r = simulate(&s).unwrap();
            prop_assert_eq!(r.served + r.no_shows, n);
            prop_assert!(r.served <= n);
            prop_assert!(r.waits.iter().all(|w| *w >= 0.0));
            prop_assert!(r.doctor_idle_minutes >= 0.0);
        }

        #[test]
        fn walk_in_is_fifo_and_obeys_lindley(seed in any::<u64>(), n in 1usize..60) {
            let s = SimScenario::walk_in(n, seed);
            let r = simulate(&s).unwrap();
            let day = Day::new(&ClinicConfig::default());
            let starts: Vec<f64> = r.patients.iter().map(|p| p.service_start_minute.unwrap()).collect();
            prop_assert!(starts.windows(2).all(|w| w[0] < w[1]), "completion order follows arrival order");
            let arrivals: Vec<f64> = r.patients.iter().map(|p| day.clock_to_open(p.arrival_minute)).collect();
            for i in 0..n - 1 {
                let inter = arrivals[i + 1] - arrivals[i];
                let lindley = (r.waits[i] + 15.0 - inter).max(0.0);
                prop_assert!((r.waits[i + 1] - lindley).abs() < 1e-9);
                prop_assert!(r.waits[i + 1] >= r.waits[i] - inter - 1e-9);
            }
        }

        // Per-patient waits and the total wait of attendees can only fall as
        // more patients fail to show.
        #[test]
        fn no_shows_never_add_waiting(seed in any::<u64>(), lo in 0.0f64..1.0, extra in 0.0f64..1.0) {
            let hi = (lo + extra).min(1.0);
            let mut a = SimScenario::appointments(32, seed);
            a.punctuality.no_show_rate = lo;
            let mut b = a.clone();
            b.punctuality.no_show_rate = hi;
            let (ra, rb) = (simulate(&a).unwrap(), simulate(&b).unwrap());
            for (pa, pb) in ra.patients.iter().zip(&rb.patients) {
                if let (Some(wa), Some(wb)) = (pa.wait_minutes, pb.wait_minutes) {
                    prop_assert!(wb <= wa + 1e-9);
                }
                prop_assert!(pa.attended || !pb.attended);
            }
            let total = |r: &SimReport| r.waits.iter().sum::<f64>();
            prop_assert!(total(&rb) <= total(&ra) + 1e-9);
        }
    }
}
