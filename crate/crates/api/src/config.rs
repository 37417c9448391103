//! Service configuration: a flat TOML key/value file, each key overridable
//! by an environment variable.
//!
//! | key                 | env                        | default           |
//! |---------------------|----------------------------|-------------------|
//! | `listen`            | `CLINIC_LISTEN`            | `127.0.0.1:8080`  |
//! | `store_path`        | `CLINIC_STORE_PATH`        | `clinic.db`       |
//! | `sms_sink`          | `CLINIC_SMS_SINK`          | `sms-outbox.log`  |
//! | `tick_seconds`      | `CLINIC_TICK_SECONDS`      | `60`              |
//! | `session_ttl_hours` | `CLINIC_SESSION_TTL_HOURS` | `12`              |

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use clinic_core::{ClinicError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub store_path: PathBuf,
    pub sms_sink: PathBuf,
    pub tick_seconds: u64,
    pub session_ttl_hours: i64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            store_path: PathBuf::from("clinic.db"),
            sms_sink: PathBuf::from("sms-outbox.log"),
            tick_seconds: 60,
            session_ttl_hours: 12,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    listen: Option<String>,
    store_path: Option<PathBuf>,
    sms_sink: Option<PathBuf>,
    tick_seconds: Option<u64>,
    session_ttl_hours: Option<i64>,
}

pub const ENV_KEYS: [(&str, &str); 5] = [
    ("listen", "CLINIC_LISTEN"),
    ("store_path", "CLINIC_STORE_PATH"),
    ("sms_sink", "CLINIC_SMS_SINK"),
    ("tick_seconds", "CLINIC_TICK_SECONDS"),
    ("session_ttl_hours", "CLINIC_SESSION_TTL_HOURS"),
];

fn invalid(msg: impl Into<String>) -> ClinicError {
    ClinicError::InvalidConfig(msg.into())
}

impl ServiceConfig {
    /// Defaults, then the file (if any), then process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => Some(
                std::fs::read_to_string(p)
                    .map_err(|e| invalid(format!("cannot read {}: {e}", p.display())))?,
            ),
            None => None,
        };
        Self::from_sources(text.as_deref(), |k| std::env::var(k).ok())
    }

    pub fn from_sources(
        file_text: Option<&str>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self> {
        let file: FileConfig = match file_text {
            Some(t) => toml::from_str(t).map_err(|e| invalid(e.to_string()))?,
            None => FileConfig::default(),
        };
        let mut cfg = ServiceConfig::default();
        if let Some(l) = file.listen {
            cfg.listen = l
                .parse()
                .map_err(|_| invalid(format!("listen: bad address {l:?}")))?;
        }
        if let Some(p) = file.store_path {
            cfg.store_path = p;
        }
        if let Some(p) = file.sms_sink {
            cfg.sms_sink = p;
        }
        if let Some(t) = file.tick_seconds {
            cfg.tick_seconds = t;
        }
        if let Some(h) = file.session_ttl_hours {
            cfg.session_ttl_hours = h;
        }

        if let Some(v) = env("CLINIC_LISTEN") {
            cfg.listen = v
                .parse()
                .map_err(|_| invalid(format!("CLINIC_LISTEN: bad address {v:?}")))?;
        }
        if let Some(v) = env("CLINIC_STORE_PATH") {
            cfg.store_path = v.into();
        }
        if let Some(v) = env("CLINIC_SMS_SINK") {
            cfg.sms_sink = v.into();
        }
        if let Some(v) = env("CLINIC_TICK_SECONDS") {
            cfg.tick_seconds = v
                .parse()
                .map_err(|_| invalid(format!("CLINIC_TICK_SECONDS: not an integer {v:?}")))?;
        }
        if let Some(v) = env("CLINIC_SESSION_TTL_HOURS") {
            cfg.session_ttl_hours = v
                .parse()
                .map_err(|_| invalid(format!("CLINIC_SESSION_TTL_HOURS: not an integer {v:?}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tick_seconds == 0 {
            return Err(invalid("tick_seconds must be at least 1"));
        }
        if self.session_ttl_hours <= 0 {
            return Err(invalid("session_ttl_hours must be positive"));
        }
        if self.store_path.as_os_str().is_empty() || self.sms_sink.as_os_str().is_empty() {
            return Err(invalid("store_path and sms_sink must be set"));
        }
        Ok(())
    }
}
