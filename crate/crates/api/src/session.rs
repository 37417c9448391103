use std::collections::HashMap;
use std::sync::RwLock;

use chrono::{Duration, NaiveDateTime};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Who may log in through the API. Admins use the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Patient,
    Doctor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub token: String,
    pub principal_id: String,
    pub role: Role,
    pub issued_at: NaiveDateTime,
    pub expires_at: NaiveDateTime,
}

const TOKEN_BYTES: usize = 32;

#[derive(Debug)]
pub struct SessionStore {
    ttl: Duration,
    sessions: RwLock<HashMap<String, Session>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn issue(&self, principal_id: &str, role: Role, now: NaiveDateTime) -> Session {
        let mut raw = [0u8; TOKEN_BYTES];
        rand::rng().fill_bytes(&mut raw);
        let session = Session {
            token: hex::encode(raw),
            principal_id: principal_id.to_string(),
            role,
            issued_at: now,
            expires_at: now + self.ttl,
        };
        let mut sessions = self.sessions.write().unwrap();
        sessions.retain(|_, s| s.expires_at > now);
        sessions.insert(session.token.clone(), session.clone());
        session
    }

    /// The live session for `token`, if any.
    pub fn check(&self, token: &str, now: NaiveDateTime) -> Option<Session> {
        self.sessions
            .read()
            .unwrap()
            .get(token)
            .filter(|s| s.expires_at > now)
            .cloned()
    }

    pub fn revoke_principal(&self, principal_id: &str, role: Role) -> usize {
        let mut sessions = self.sessions.write().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| !(s.principal_id == principal_id && s.role == role));
        before - sessions.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t0() -> NaiveDateTime {
        chrono::NaiveDate::from_ymd_opt(2026, 5, 1)
            .unwrap()
            .and_hms_opt(8, 0, 0)
            .unwrap()
    }

    #[test]
    fn tokens_are_long_and_unique() {
        let store = SessionStore::new(Duration::hours(12));
        let a = store.issue("P1", Role::Patient, t0());
        let b = store.issue("P1", Role::Patient, t0());
        assert_ne!(a.token, b.token);
        assert_eq!(a.token.len(), TOKEN_BYTES * 2);
        assert_eq!(a.expires_at, t0() + Duration::hours(12));
    }

    #[test]
    fn expiry_and_revocation() {
        let store = SessionStore::new(Duration::hours(12));
        let s = store.issue("D1", Role::Doctor, t0());
        assert!(store.check(&s.token, t0() + Duration::hours(11)).is_some());
        assert!(store.check(&s.token, t0() + Duration::hours(12)).is_none());
        let other = store.issue("D1", Role::Patient, t0());
        assert_eq!(store.revoke_principal("D1", Role::Doctor), 1);
        assert!(store.check(&s.token, t0()).is_none());
        assert!(store.check(&other.token, t0()).is_some());
        assert!(store.check("nonsense", t0()).is_none());
    }
}
