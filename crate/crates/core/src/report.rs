//! Report data types emitted as JSON and CSV by the command-line tools.
//!
//! The JSON schema is versioned through [`SCHEMA_VERSION`]. Witness point
//! arrays are serialized as base64 blobs of 64-bit little-endian floats so
//! worst cases can be replayed bit-exactly.

use base64::Engine;
use serde::Serialize;

/// Bumped whenever a report field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// One witness array: a labelled, base64-encoded `f64` little-endian blob.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessBlob {
    pub label: String,
    pub len: usize,
    pub data_b64: String,
}

impl WitnessBlob {
    pub fn new(label: impl Into<String>, values: &[f64]) -> Self {
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        WitnessBlob {
            label: label.into(),
            len: values.len(),
            data_b64: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn decode(&self) -> Vec<f64> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(&self.data_b64)
            .expect("witness blobs are always valid base64");
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
    }
}

/// Structured outcome of one property check or demonstration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub schema_version: u32,
    pub name: String,
    pub trials: u64,
    pub failures: u64,
    /// Check-specific extremal statistic; see each check's documentation.
    pub worst_violation: f64,
    /// Equality-boundary trials (e.g. `w_y = 0` in the stability bound),
    /// counted separately from failures.
    pub boundary_cases: u64,
    /// Trials where a derived construction left its domain; logged, not failed.
    pub construction_violations: u64,
    pub witness: Vec<WitnessBlob>,
    pub seed: u64,
    pub precision: String,
    pub curvature: f64,
    pub dim: usize,
    pub notes: String,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}
