use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::env::ProblemInstance;
use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of the canonical JSON form of any serializable value.
pub fn manifest_digest<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(value)?))
}

pub fn instance_digest(instance: &ProblemInstance) -> Result<String> {
    Ok(sha256_hex(instance.to_json()?.as_bytes()))
}
