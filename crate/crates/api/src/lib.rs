//! HTTP/JSON service for patients and doctors, plus the background
//! reminder loop.

pub mod config;
pub mod envelope;
pub mod routes;
pub mod session;

use std::future::Future;
use std::sync::Arc;
use std::time::Duration as StdDuration;

use chrono::{Duration, NaiveDateTime};
use clinic_core::{
    ClinicConfig, ClinicError, Clock, FileSinkGateway, Reminders, Result, Scheduler, SmsGateway,
    Store, SystemClock,
};

pub use config::ServiceConfig;
pub use envelope::{status_for, ApiError};
pub use routes::router;
pub use session::{Role, Session, SessionStore};

struct Inner {
    scheduler: Scheduler,
    reminders: Reminders,
    sessions: SessionStore,
    clock: Arc<dyn Clock>,
    gateway: Arc<dyn SmsGateway>,
}

/// Shared handler state. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(
        store: Store,
        config: ClinicConfig,
        clock: Arc<dyn Clock>,
        gateway: Arc<dyn SmsGateway>,
        session_ttl: Duration,
    ) -> Result<Self> {
        Ok(Self {
            inner: Arc::new(Inner {
                scheduler: Scheduler::new(store.clone(), config.clone())?,
                reminders: Reminders::new(store, config),
                sessions: SessionStore::new(session_ttl),
                clock,
                gateway,
            }),
        })
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.inner.scheduler
    }

    pub fn reminders(&self) -> &Reminders {
        &self.inner.reminders
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.inner.sessions
    }

    pub fn gateway(&self) -> &dyn SmsGateway {
        self.inner.gateway.as_ref()
    }

    pub fn now(&self) -> NaiveDateTime {
        self.inner.clock.now()
    }

    /// Runs store-bound work off the async executor.
    pub(crate) async fn blocking<T, F>(&self, f: F) -> std::result::Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&AppState) -> Result<T> + Send + 'static,
    {
        let state = self.clone();
        tokio::task::spawn_blocking(move || f(&state))
            .await
            .map_err(|e| ApiError(ClinicError::Internal(format!("worker failed: {e}"))))?
            .map_err(ApiError)
    }
}

/// Runs the automatic reminder sweep every `period` until the task is
/// aborted. A failing sweep is logged and retried on the next tick.
pub fn spawn_reminder_loop(state: AppState, period: StdDuration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            interval.tick().await;
            let st = state.clone();
            let outcome =
                tokio::task::spawn_blocking(move || st.reminders().tick(st.now(), st.gateway()))
                    .await;
            match outcome {
                Ok(Ok(report)) => {
                    if report.dispatched > 0 || !report.failed.is_empty() {
                        tracing::info!(
                            sent = report.dispatched,
                            failed = report.failed.len(),
                            "reminder sweep"
                        );
                    }
                }
                Ok(Err(e)) => tracing::warn!(error = %e, "reminder sweep failed"),
                Err(e) => tracing::error!(error = %e, "reminder sweep panicked"),
            }
        }
    })
}

/// Opens the store and SMS sink, binds the listener and serves until
/// `shutdown` resolves. Nothing is created on disk if the configuration
/// is unusable.
pub async fn serve(
    cfg: ServiceConfig,
    clinic: ClinicConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<()> {
    cfg.validate()?;
    clinic.validate()?;
    for path in [&cfg.store_path, &cfg.sms_sink] {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(ClinicError::InvalidConfig(format!(
                    "directory {} does not exist",
                    dir.display()
                )));
            }
        }
    }
    let listener = tokio::net::TcpListener::bind(cfg.listen)
        .await
        .map_err(|e| ClinicError::InvalidConfig(format!("cannot listen on {}: {e}", cfg.listen)))?;

    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let store = Store::open(&cfg.store_path)?;
    store.migrate()?;
    let gateway = Arc::new(FileSinkGateway::open(&cfg.sms_sink, clock.clone())?);
    let state = AppState::new(
        store,
        clinic,
        clock,
        gateway,
        Duration::hours(cfg.session_ttl_hours),
    )?;

    let ticker = spawn_reminder_loop(state.clone(), StdDuration::from_secs(cfg.tick_seconds));
    tracing::info!(listen = %cfg.listen, store = %cfg.store_path.display(), "serving");
    let served = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await;
    ticker.abort();
    served.map_err(|e| ClinicError::Internal(format!("server stopped: {e}")))
}
