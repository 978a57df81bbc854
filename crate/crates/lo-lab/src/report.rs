//! Report envelope and serialization helpers shared by the CLI.

use serde::{Deserialize, Serialize};

/// Version stamped into every serialized report.
pub const SCHEMA_VERSION: u32 = 1;

/// Top-level JSON report emitted by every CLI command.
///
/// `timing_ms` is wall-clock and the only field that varies between
/// identical runs; consumers that want byte-identical artifacts compare
/// `result` (or use `--output`, which is written from the same value).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub seed: u64,
    pub result: serde_json::Value,
    pub timing_ms: u64,
}

/// Serialize `num::BigRational` as `"numerator/denominator"` so exact
/// values survive JSON round-trips.
pub mod rational_string {
    use num::rational::Ratio;
    use num::BigInt;
    use serde::{self, Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(value: &Ratio<BigInt>, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Ratio<BigInt>, D::Error> {
        let text = String::deserialize(de)?;
        Ratio::from_str(&text).map_err(serde::de::Error::custom)
    }
}
