//! Machine-readable report assembly. Field order is fixed by struct order,
//! every collection is emitted in a deterministic order, and the timestamp
//! is confined to a single provenance field so that reports from identical
//! configs and seeds are byte-identical apart from that one line.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use swolff_core::tol;

#[derive(Serialize)]
pub struct Tolerances {
    pub structural: f64,
    pub eigen: f64,
    pub rotation: f64,
    pub support: f64,
    pub branch: f64,
}

impl Tolerances {
    pub fn current() -> Self {
        Tolerances {
            structural: tol::TOL_STRUCT,
            eigen: tol::TOL_EIG,
            rotation: tol::TOL_ROT,
            support: tol::TOL_SUPPORT,
            branch: tol::TOL_BRANCH,
        }
    }
}

#[derive(Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    /// SHA-256 of the raw config bytes.
    pub config_hash: String,
    pub seed: u64,
    /// Tensor index convention for every matrix in the report.
    pub ordering: &'static str,
    pub tolerances: Tolerances,
    /// Multiplier applied to the pass/fail thresholds of this run.
    pub tolerance_scale: f64,
    /// Seconds since the Unix epoch; the only run-dependent field.
    pub timestamp: u64,
}

impl Provenance {
    pub fn new(config_bytes: &[u8], seed: u64, tolerance_scale: f64) -> Self {
        Provenance {
            tool: "swolff",
            version: env!("CARGO_PKG_VERSION"),
            config_hash: format!("sha256:{}", hex(&Sha256::digest(config_bytes))),
            seed,
            ordering: "site-major",
            tolerances: Tolerances::current(),
            tolerance_scale,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A task section: either its result or the error that stopped it. Both
/// carry `passed` so the overall verdict never needs to peek inside.
#[derive(Serialize)]
#[serde(untagged)]
pub enum TaskOutcome<T: Serialize> {
    Done(T),
    Error { passed: bool, error: String },
}

impl<T: Serialize> TaskOutcome<T> {
    pub fn from_result(r: Result<T, swolff_core::SwError>) -> Self {
        match r {
            Ok(t) => TaskOutcome::Done(t),
            Err(e) => TaskOutcome::Error { passed: false, error: e.to_string() },
        }
    }
}

pub fn to_json_line_terminated<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}
