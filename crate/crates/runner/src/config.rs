use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::RunError;

/// Settings shared by every subcommand, after applying flag and environment overrides.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub command: &'static str,
    pub seed: u64,
    pub replicates: usize,
    pub out: PathBuf,
    /// Directory of the config file; relative paths in payloads resolve against it.
    pub base_dir: PathBuf,
    pub config_sha256: String,
    payload: Value,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Experiment {
    pub fn load(command: &'static str, path: &Path, overrides: &Overrides) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_value(command, value, base_dir, overrides)
    }

    pub fn from_value(command: &'static str, value: Value, base_dir: PathBuf, overrides: &Overrides) -> Result<Self, RunError> {
        let Value::Object(mut map) = value else {
            return Err(RunError::Config("config must be a JSON object".into()));
        };
        let file_seed = take(&mut map, "seed", |v| v.as_u64())?;
        let file_replicates = take(&mut map, "replicates", |v| v.as_u64())?;
        let file_out = take(&mut map, "out", |v| v.as_str().map(PathBuf::from))?;

        let seed = overrides
            .seed
            .or(file_seed)
            .ok_or_else(|| RunError::Config("no seed: set `seed` in the config, --seed or BNP_SEED".into()))?;
        let replicates = match overrides.replicates.or(file_replicates.map(|r| r as usize)) {
            Some(0) => return Err(RunError::Config("replicates must be at least 1".into())),
            Some(r) => r,
            None => 1,
        };
        let out = overrides
            .out
            .clone()
            .or_else(|| file_out.map(|p| base_dir.join(p)))
            .ok_or_else(|| RunError::Config("no output directory: set `out` in the config or --out".into()))?;

        let payload = Value::Object(map);
        let canonical = serde_json::json!({
            "command": command,
            "seed": seed,
            "replicates": replicates,
            "payload": payload,
        });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            command,
            seed,
            replicates,
            out,
            base_dir,
            config_sha256,
            payload,
        })
    }

    /// Subcommand settings; unknown fields are rejected by the payload type.
    pub fn payload<T: DeserializeOwned>(&self) -> Result<T, RunError> {
        serde_json::from_value(self.payload.clone()).map_err(|e| RunError::Config(format!("{}: {e}", self.command)))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

fn take<T>(map: &mut Map<String, Value>, key: &str, parse: impl Fn(&Value) -> Option<T>) -> Result<Option<T>, RunError> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => parse(&v)
            .map(Some)
            .ok_or_else(|| RunError::Config(format!("`{key}` has the wrong type: {v}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn load(v: Value, o: &Overrides) -> Result<Experiment, RunError> {
        Experiment::from_value("test", v, PathBuf::from("/cfg"), o)
    }

    #[test]
    fn precedence() {
        let v = json!({"seed": 3, "replicates": 4, "out": "o", "x": 1});
        let e = load(v.clone(), &Overrides::default()).unwrap();
        assert_eq!((e.seed, e.replicates), (3, 4));
        assert_eq!(e.out, PathBuf::from("/cfg/o"));
        let o = Overrides {
            seed: Some(9),
            replicates: Some(2),
            out: Some("/tmp/x".into()),
        };
        let e2 = load(v, &o).unwrap();
        assert_eq!((e2.seed, e2.replicates), (9, 2));
        assert_ne!(e.config_sha256, e2.config_sha256);
    }

    #[test]
    fn seed_is_required() {
        assert!(load(json!({"out": "o"}), &Overrides::default()).is_err());
        assert!(load(json!({"seed": -1, "out": "o"}), &Overrides::default()).is_err());
        assert!(load(json!([1]), &Overrides::default()).is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = load(json!({"seed": 1, "out": "a"}), &Overrides::default()).unwrap();
        let b = load(json!({"seed": 1, "out": "b"}), &Overrides::default()).unwrap();
        assert_eq!(a.config_sha256, b.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
    }
}
