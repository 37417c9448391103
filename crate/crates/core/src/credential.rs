//! Salted password hashes (Argon2id, PHC string format).

use std::sync::OnceLock;

use argon2::password_hash::{
    rand_core::OsRng, PasswordHash, PasswordHasher, PasswordVerifier, SaltString,
};
use argon2::Argon2;

use crate::error::{ClinicError, Result};

pub const MIN_PASSWORD_LEN: usize = 8;

/// A stored password hash. `Debug` never prints the hash.
#[derive(Clone, PartialEq, Eq)]
pub struct Credential(String);

impl std::fmt::Debug for Credential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Credential(<redacted>)")
    }
}

impl Credential {
    pub fn hash(password: &str) -> Result<Self> {
        let salt = SaltString::generate(&mut OsRng);
        Argon2::default()
            .hash_password(password.as_bytes(), &salt)
            .map(|h| Credential(h.to_string()))
            .map_err(|e| ClinicError::Internal(format!("password hashing failed: {e}")))
    }

    /// Hashes a new password after the minimum-length check.
    pub fn new_password(password: &str) -> Result<Self> {
        if password.chars().count() < MIN_PASSWORD_LEN {
            return Err(ClinicError::WeakPassword {
                min: MIN_PASSWORD_LEN,
            });
        }
        Self::hash(password)
    }

    /// A hash of a random secret nobody knows. Used for accounts registered
    /// without a password; login fails until one is set.
    pub fn locked() -> Result<Self> {
        let secret = SaltString::generate(&mut OsRng);
        Self::hash(secret.as_str())
    }

    pub fn from_stored(phc: String) -> Self {
        Credential(phc)
    }

    pub fn stored_form(&self) -> &str {
        &self.0
    }

    pub fn verify(&self, password: &str) -> bool {
        match PasswordHash::new(&self.0) {
            Ok(parsed) => Argon2::default()
                .verify_password(password.as_bytes(), &parsed)
                .is_ok(),
            Err(_) => false,
        }
    }
}

/// Verifies against `stored`, or burns the same work against a fixed dummy
/// hash when the principal does not exist, so both failures look alike.
pub fn verify_or_dummy(stored: Option<&Credential>, password: &str) -> bool {
    static DUMMY: OnceLock<Credential> = OnceLock::new();
    match stored {
        Some(c) => c.verify(password),
        None => {
            let dummy = DUMMY.get_or_init(|| {
                Credential::hash("dummy-password-for-timing").expect("hash dummy credential")
            });
            let _ = dummy.verify(password);
            false
        }
    }
}
