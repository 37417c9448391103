//! Outpatient appointment management: slot-based booking under fixed clinic
//! rules, durable storage, SMS reminders and a clinic-day queue simulator.

pub mod clock;
pub mod config;
pub mod credential;
pub mod domain;
pub mod error;
pub mod reminders;
pub mod scheduling;
pub mod sim;
pub mod store;

pub use clock::{Clock, ManualClock, SystemClock};
pub use config::{ClinicConfig, Shift, TimeWindow};
pub use credential::Credential;
pub use domain::*;
pub use error::{ClinicError, ErrorCode, Result};
pub use reminders::{FileSinkGateway, Reminders, SmsGateway};
pub use scheduling::{Principal, Scheduler};
pub use store::Store;
