//! The user-level configuration file at `<skilldex home>/config.json`.
//!
//! A flat string map restricted to a known key set; `config set` rejects
//! anything else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fsutil;

/// Keys the configuration file accepts.
pub const CONFIG_KEYS: [&str; 5] = [
    "registry.url",
    "auth.token",
    "github.token",
    "defaults.scope",
    "suggest.generator_url",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key {0:?} (known keys: registry.url, auth.token, github.token, defaults.scope, suggest.generator_url)")]
    UnknownKey(String),
    #[error("corrupt config file {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },
    #[error("config I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::UnknownKey(_) => "E_UNKNOWN_CONFIG_KEY",
            ConfigError::Corrupt { .. } => "E_CONFIG_CORRUPT",
            ConfigError::Io { .. } => "E_IO",
        }
    }
}

/// The loaded configuration plus where it lives.
#[derive(Debug, Clone)]
pub struct CliConfig {
    path: PathBuf,
    values: BTreeMap<String, String>,
}

impl CliConfig {
    /// Load from `<skilldex_home>/config.json`; a missing file is empty.
    pub fn load(skilldex_home: &Path) -> Result<CliConfig, ConfigError> {
        let path = skilldex_home.join("config.json");
        let values = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| ConfigError::Corrupt {
                path: path.clone(),
                detail: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(source) => return Err(ConfigError::Io { path, source }),
        };
        Ok(CliConfig { path, values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Set a known key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Remove a key; returns whether it was present.
    pub fn unset(&mut self, key: &str) -> bool {
        self.values.remove(key).is_some()
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Persist atomically.
    pub fn save(&self) -> Result<(), ConfigError> {
        let mut bytes = serde_json::to_vec_pretty(&self.values).expect("string map serializes");
        bytes.push(b'\n');
        fsutil::atomic_write(&self.path, &bytes).map_err(|source| ConfigError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    #[test]
    fn roundtrip_and_unknown_key_rejection() {
        let tmp = TempDir::new().unwrap();
        let mut config = CliConfig::load(tmp.path()).unwrap();
        config.set("registry.url", "http://127.0.0.1:9/v1").unwrap();
        assert!(matches!(
            config.set("registry.downloads", "x"),
            Err(ConfigError::UnknownKey(_))
        ));
        config.save().unwrap();

        let reloaded = CliConfig::load(tmp.path()).unwrap();
        assert_eq!(reloaded.get("registry.url"), Some("http://127.0.0.1:9/v1"));
        assert_eq!(reloaded.get("auth.token"), None);
    }

    #[test]
    fn unset_removes() {
        let tmp = TempDir::new().unwrap();
        let mut config = CliConfig::load(tmp.path()).unwrap();
        config.set("defaults.scope", "global").unwrap();
        assert!(config.unset("defaults.scope"));
        assert!(!config.unset("defaults.scope"));
    }
}
