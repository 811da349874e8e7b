use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LdsStream, StreamState};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Wall-clock metadata. Not part of the reproducibility contract.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub saved_unix_seconds: u64,
    pub elapsed_seconds: f64,
}

impl WallClock {
    pub fn now(elapsed_seconds: f64) -> Self {
        let saved_unix_seconds = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        WallClock {
            saved_unix_seconds,
            elapsed_seconds,
        }
    }
}

/// Resumable state of a counting run, stored as canonical JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub fingerprint: String,
    pub stream: StreamState,
    pub accumulators: Vec<u64>,
    pub wall_clock: WallClock,
}

/// SHA-256 (hex) of the canonical JSON encoding of the run parameters.
pub fn fingerprint<T: Serialize>(params: &T) -> Result<String> {
    let bytes = serde_json::to_vec(params)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl Checkpoint {
    pub fn save(stream: &LdsStream, accumulators: &[u64], fingerprint: &str, elapsed: f64) -> Self {
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            fingerprint: fingerprint.to_string(),
            stream: stream.state().clone(),
            accumulators: accumulators.to_vec(),
            wall_clock: WallClock::now(elapsed),
        }
    }

    /// Inverse of [`Checkpoint::save`]; refuses checkpoints written for other
    /// parameters or another schema.
    pub fn restore(&self, expected_fingerprint: &str) -> Result<(LdsStream, Vec<u64>)> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Checkpoint(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.fingerprint != expected_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: expected_fingerprint.to_string(),
                found: self.fingerprint.clone(),
            });
        }
        Ok((LdsStream::from_state(self.stream.clone())?, self.accumulators.clone()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Checkpoint(format!("unreadable checkpoint: {e}")))
    }

    /// Writes atomically (temporary file + rename).
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_json()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc::StreamKind;

    #[test]
    fn roundtrip_and_tamper_detection() {
        let mut s = LdsStream::new(StreamKind::Sobol, 3, 5).unwrap();
        s.set_next_index(1000);
        let fp = fingerprint(&("scan", 3, 5)).unwrap();
        let cp = Checkpoint::save(&s, &[1, 2, 3], &fp, 0.5);
        let back = Checkpoint::from_json(&cp.to_json().unwrap()).unwrap();
        let (s2, acc) = back.restore(&fp).unwrap();
        assert_eq!(s2.state(), s.state());
        assert_eq!(acc, vec![1, 2, 3]);

        let mut bad = back.clone();
        bad.fingerprint.replace_range(0..1, "x");
        assert!(matches!(bad.restore(&fp), Err(Error::FingerprintMismatch { .. })));
    }

    #[test]
    fn empty_accumulators_survive() {
        let s = LdsStream::new(StreamKind::PseudoRandom, 2, 1).unwrap();
        let cp = Checkpoint::save(&s, &[], "fp", 0.0);
        let (s2, acc) = cp.restore("fp").unwrap();
        assert_eq!(s2.next_index(), 0);
        assert!(acc.is_empty());
    }
}
