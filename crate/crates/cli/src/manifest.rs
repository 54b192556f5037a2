//! Run manifests: the resolved spec, tool version, generator and a content hash.

use std::time::{SystemTime, UNIX_EPOCH};

use latticeflow::samplers::RNG_NAME;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunSpec;

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub model: String,
    pub spec: RunSpec,
    /// Command-specific settings such as observable names or sizes.
    pub extra: serde_json::Value,
    pub tool_version: String,
    pub rng: String,
    /// SHA-256 of `blob <len>\0<canonical JSON>` over command, spec and extra.
    pub config_hash: String,
    /// Unix time at start and elapsed seconds; absent from the reproducible header.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_clock: Option<WallClock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix: f64,
    pub elapsed_seconds: f64,
}

/// Git-style content hash of a JSON value.
pub fn content_hash(value: &serde_json::Value) -> String {
    let body = serde_json::to_string(value).expect("JSON value serialises");
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    hex::encode(h.finalize())
}

impl RunManifest {
    pub fn new(command: &str, spec: &RunSpec, extra: serde_json::Value) -> Self {
        let hashed = serde_json::json!({ "command": command, "spec": spec, "extra": extra });
        RunManifest {
            command: command.to_string(),
            model: spec.model.id().to_string(),
            spec: spec.clone(),
            extra,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_NAME.to_string(),
            config_hash: content_hash(&hashed),
            wall_clock: None,
        }
    }

    /// Copy stamped with the start time and elapsed seconds.
    pub fn with_wall_clock(&self, started: SystemTime) -> Self {
        let started_unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let elapsed_seconds = started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0);
        RunManifest { wall_clock: Some(WallClock { started_unix, elapsed_seconds }), ..self.clone() }
    }

    /// Single-line `# manifest {...}` header without the wall clock.
    pub fn header(&self) -> String {
        let m = RunManifest { wall_clock: None, ..self.clone() };
        format!("# manifest {}", serde_json::to_string(&m).expect("manifest serialises"))
    }

    /// Parses a manifest from JSON or from a CSV whose first line is the manifest header.
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        let first = text.lines().next().unwrap_or("");
        match first.strip_prefix("# manifest ") {
            Some(json) => serde_json::from_str(json),
            None => serde_json::from_str(text),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_json, resolve};

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = resolve(&parse_json(r#"{"model":"loop-o2","x":0.8}"#).unwrap()).unwrap();
        let b = resolve(&parse_json(r#"{"model":"loop-o2","x":0.9}"#).unwrap()).unwrap();
        let ma = RunManifest::new("sample", &a, serde_json::Value::Null);
        assert_eq!(ma.config_hash, RunManifest::new("sample", &a, serde_json::Value::Null).config_hash);
        assert_ne!(ma.config_hash, RunManifest::new("sample", &b, serde_json::Value::Null).config_hash);
        assert_eq!(ma.config_hash.len(), 64);
    }

    #[test]
    fn header_round_trip() {
        let spec = resolve(&parse_json(r#"{"model":"fk","q":3}"#).unwrap()).unwrap();
        let m = RunManifest::new("sample", &spec, serde_json::json!({"k": 1}));
        let text = format!("{}\nrow\n", m.header());
        assert_eq!(RunManifest::parse(&text).unwrap(), m);
        let stamped = m.with_wall_clock(SystemTime::now());
        assert_eq!(RunManifest::parse(&serde_json::to_string(&stamped).unwrap()).unwrap(), stamped);
    }

    #[test]
    fn parameters_round_trip_exactly() {
        let spec = resolve(&parse_json(r#"{"model":"loop-o2","x":0.7071067811865476}"#).unwrap()).unwrap();
        let mut m = RunManifest::new("sample", &spec, serde_json::Value::Null);
        for k in 0..2000u64 {
            let t = 1.79e9 + k as f64 * 0.123456789;
            m.wall_clock = Some(WallClock { started_unix: t, elapsed_seconds: t.sqrt() });
            assert_eq!(RunManifest::parse(&serde_json::to_string(&m).unwrap()).unwrap(), m);
        }
    }
}
