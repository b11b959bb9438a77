//! Versioned result files and atomic persistence.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA: u32 = 1;

/// Echo of the command line that produced a result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub command: String,
    pub config: Option<String>,
    pub seed: u64,
    pub shots: Option<u64>,
    pub exact: bool,
    pub output: Option<String>,
    pub noise_scale: f64,
    #[serde(default)]
    pub options: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub schema: u32,
    pub request: Request,
    pub version: String,
    pub wall_clock_s: f64,
    pub payload: Value,
}

impl Envelope {
    pub fn new(request: Request, wall_clock_s: f64, payload: Value) -> Self {
        Self { schema: SCHEMA, request, version: env!("CARGO_PKG_VERSION").to_string(), wall_clock_s, payload }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serialization")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let env: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: not a result envelope: {e}", path.display())))?;
        if env.schema != SCHEMA {
            return Err(CliError::Validation(format!("{}: unsupported schema {}", path.display(), env.schema)));
        }
        Ok(env)
    }
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Validation(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trips() {
        let req = Request {
            command: "teleport".into(),
            config: Some("device.json".into()),
            seed: 7,
            shots: Some(1000),
            exact: false,
            output: None,
            noise_scale: 0.1 + 0.2,
            options: [("scrambler".to_string(), "us".to_string())].into(),
        };
        let env = Envelope::new(req, 1.0 / 3.0, serde_json::json!({ "F_avg": 0.6738123456789012, "m": [[1e-300, -0.0]] }));
        let back: Envelope = serde_json::from_str(&env.to_json()).unwrap();
        assert_eq!(back, env);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
