//! Clinic operating rules: shift windows, slot length and booking horizon.

use chrono::{Duration, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::ClinicError;

/// A staffed half-day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Shift {
    Morning,
    Afternoon,
}

impl Shift {
    pub const ALL: [Shift; 2] = [Shift::Morning, Shift::Afternoon];

    pub fn as_str(self) -> &'static str {
        match self {
            Shift::Morning => "MORNING",
            Shift::Afternoon => "AFTERNOON",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MORNING" => Some(Shift::Morning),
            "AFTERNOON" => Some(Shift::Afternoon),
            _ => None,
        }
    }
}

impl std::fmt::Display for Shift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Half-open wall-clock interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl TimeWindow {
    pub fn new(start: NaiveTime, end: NaiveTime) -> Self {
        Self { start, end }
    }

    pub fn hm(start: (u32, u32), end: (u32, u32)) -> Self {
        Self {
            start: hm(start.0, start.1),
            end: hm(end.0, end.1),
        }
    }

    pub fn minutes(&self) -> i64 {
        (self.end - self.start).num_minutes()
    }

    pub fn contains(&self, t: NaiveTime) -> bool {
        self.start <= t && t < self.end
    }

    pub fn intersects(&self, other: &TimeWindow) -> bool {
        self.start < other.end && other.start < self.end
    }
}

pub(crate) fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).expect("valid wall-clock time")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClinicConfig {
    pub morning_window: TimeWindow,
    pub afternoon_window: TimeWindow,
    pub slot_minutes: i64,
    pub min_lead_days: i64,
    pub max_horizon_days: i64,
    pub reminder_lead_minutes: i64,
}

impl Default for ClinicConfig {
    fn default() -> Self {
        Self {
            morning_window: TimeWindow::hm((8, 0), (12, 0)),
            afternoon_window: TimeWindow::hm((13, 0), (17, 0)),
            slot_minutes: 15,
            min_lead_days: 1,
            max_horizon_days: 30,
            reminder_lead_minutes: 30,
        }
    }
}

impl ClinicConfig {
    /// Checks the structural invariants: aligned, ordered windows separated
    /// by a one-hour lunch, and a sane booking horizon.
    pub fn validate(&self) -> Result<(), ClinicError> {
        let bad = |msg: &str| Err(ClinicError::InvalidConfig(msg.to_string()));
        if self.slot_minutes <= 0 {
            return bad("slot_minutes must be positive");
        }
        for w in [self.morning_window, self.afternoon_window] {
            if w.end < w.start {
                return bad("window ends before it starts");
            }
            if w.minutes() % self.slot_minutes != 0 {
                return bad("window length is not a multiple of slot_minutes");
            }
        }
        if self.morning_window.intersects(&self.afternoon_window) {
            return bad("shift windows overlap");
        }
        if (self.afternoon_window.start - self.morning_window.end).num_minutes() != 60 {
            return bad("lunch gap between windows must be 60 minutes");
        }
        if self.min_lead_days < 1 || self.max_horizon_days < self.min_lead_days {
            return bad("booking horizon must satisfy 1 <= min_lead_days <= max_horizon_days");
        }
        if self.reminder_lead_minutes <= 0 {
            return bad("reminder_lead_minutes must be positive");
        }
        Ok(())
    }

    pub fn window(&self, shift: Shift) -> TimeWindow {
        match shift {
            Shift::Morning => self.morning_window,
            Shift::Afternoon => self.afternoon_window,
        }
    }

    /// The shift whose window contains `t`, if any.
    pub fn shift_at(&self, t: NaiveTime) -> Option<Shift> {
        Shift::ALL.into_iter().find(|s| self.window(*s).contains(t))
    }

    pub fn slot_length(&self) -> Duration {
        Duration::minutes(self.slot_minutes)
    }

    pub fn reminder_lead(&self) -> Duration {
        Duration::minutes(self.reminder_lead_minutes)
    }

    /// Number of slots in a fully staffed day.
    pub fn slots_per_day(&self) -> usize {
        Shift::ALL
            .iter()
            .map(|s| (self.window(*s).minutes() / self.slot_minutes) as usize)
            .sum()
    }
}
