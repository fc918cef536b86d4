//! Load, validate, and atomically persist the per-scope `skilldex.json`.
//!
//! The manifest records every installed skill and skillset for one scope.
//! Writes go through a sibling temporary file and a rename so that no
//! observable state ever contains a partial serialization. Writes are
//! sequential within a process; concurrent writers from separate processes
//! are unsupported.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil;
use crate::scope::ScopeLevel;

/// Provenance of an installed skill or skillset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Official,
    Community,
    Local,
}

impl SourceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::Official => "official",
            SourceTag::Community => "community",
            SourceTag::Local => "local",
        }
    }
}

/// One installed skill, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstalledSkill {
    pub name: String,
    pub version: String,
    pub source: SourceTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    pub installed_at: String,
    pub spec_version: String,
    pub score: u32,
    /// Scope-relative path, always `skills/<name>`.
    pub path: String,
}

/// One installed skillset, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstalledSkillset {
    pub name: String,
    pub version: String,
    pub source: SourceTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    pub installed_at: String,
    pub spec_version: String,
    pub score: u32,
    /// Scope-relative path, always `skillsets/<name>`.
    pub path: String,
    pub embedded_skills: Vec<String>,
    pub remote_skills: Vec<String>,
}

/// The `skilldex.json` document for one scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub skilldex_version: String,
    pub scope: ScopeLevel,
    pub skills: BTreeMap<String, InstalledSkill>,
    /// Absent in manifests written before skillset support; defaults empty.
    #[serde(default)]
    pub skillsets: BTreeMap<String, InstalledSkillset>,
    pub updated_at: String,
}

impl Manifest {
    /// A fresh empty manifest for `scope`, stamped now. Not persisted.
    pub fn empty(scope: ScopeLevel) -> Manifest {
        Manifest {
            skilldex_version: env!("CARGO_PKG_VERSION").to_string(),
            scope,
            skills: BTreeMap::new(),
            skillsets: BTreeMap::new(),
            updated_at: now_utc(),
        }
    }
}

/// A loaded manifest plus any non-fatal integrity warnings.
#[derive(Debug, Clone)]
pub struct ManifestLoad {
    pub manifest: Manifest,
    /// E.g. a skillset listing a member skill that is missing from `skills`.
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("corrupt manifest {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },
    #[error("manifest I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ManifestError {
    pub fn code(&self) -> &'static str {
        match self {
            ManifestError::Corrupt { .. } => "E_MANIFEST_CORRUPT",
            ManifestError::Io { .. } => "E_IO",
        }
    }
}

/// Current UTC time as ISO-8601 with second precision.
pub fn now_utc() -> String {
    chrono::Utc::now()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Load the manifest at `path`. A missing file yields a fresh empty manifest
/// for `scope` (not persisted); a present file is parsed and schema-checked.
pub fn load_manifest(path: &Path, scope: ScopeLevel) -> Result<ManifestLoad, ManifestError> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(ManifestLoad {
                manifest: Manifest::empty(scope),
                warnings: Vec::new(),
            });
        }
        Err(source) => {
            return Err(ManifestError::Io {
                path: path.to_path_buf(),
                source,
            });
        }
    };

    let mut deserializer = serde_json::Deserializer::from_str(&text);
    let manifest: Manifest =
        serde_path_to_error::deserialize(&mut deserializer).map_err(|e| ManifestError::Corrupt {
            path: path.to_path_buf(),
            detail: format!("{} (at {})", e.inner(), e.path()),
        })?;

    validate_schema(&manifest).map_err(|detail| ManifestError::Corrupt {
        path: path.to_path_buf(),
        detail,
    })?;

    Ok(ManifestLoad {
        warnings: integrity_warnings(&manifest),
        manifest,
    })
}

/// Field-level constraints that serde's types cannot express. Returns the
/// first violation as `<path>: <detail>`.
fn validate_schema(manifest: &Manifest) -> Result<(), String> {
    for (key, skill) in &manifest.skills {
        let at = format!("skills.{}", key);
        if skill.name != *key {
            return Err(format!("{}: key does not match entry name {:?}", at, skill.name));
        }
        if skill.score > 100 {
            return Err(format!("{}.score: {} is out of range 0-100", at, skill.score));
        }
        if !skill.path.starts_with("skills/") {
            return Err(format!("{}.path: {:?} must start with \"skills/\"", at, skill.path));
        }
    }
    for (key, set) in &manifest.skillsets {
        let at = format!("skillsets.{}", key);
        if set.name != *key {
            return Err(format!("{}: key does not match entry name {:?}", at, set.name));
        }
        if set.score > 100 {
            return Err(format!("{}.score: {} is out of range 0-100", at, set.score));
        }
        if !set.path.starts_with("skillsets/") {
            return Err(format!("{}.path: {:?} must start with \"skillsets/\"", at, set.path));
        }
        let embedded: BTreeSet<&String> = set.embedded_skills.iter().collect();
        let remote: BTreeSet<&String> = set.remote_skills.iter().collect();
        if let Some(overlap) = embedded.intersection(&remote).next() {
            return Err(format!(
                "{}: skill {:?} listed as both embedded and remote",
                at, overlap
            ));
        }
    }
    Ok(())
}

/// Non-fatal cross-references: skillsets naming skills that are not in the
/// manifest's skill map.
fn integrity_warnings(manifest: &Manifest) -> Vec<String> {
    let mut warnings = Vec::new();
    for (name, set) in &manifest.skillsets {
        for skill in set.embedded_skills.iter().chain(set.remote_skills.iter()) {
            if !manifest.skills.contains_key(skill) {
                warnings.push(format!(
                    "skillset {:?} lists skill {:?} which is not installed in this scope",
                    name, skill
                ));
            }
        }
    }
    warnings
}

/// Serialize `manifest` (stable key order, 2-space indent, trailing newline)
/// and atomically replace `path`, stamping `updatedAt` first.
pub fn save_manifest(path: &Path, manifest: &mut Manifest) -> Result<(), ManifestError> {
    save_manifest_with_crash_hook(path, manifest, &mut || false)
}

/// [`save_manifest`] with a crash-injection hook between the temporary-file
/// write and the rename; the hook exists so tests can prove atomicity.
pub fn save_manifest_with_crash_hook(
    path: &Path,
    manifest: &mut Manifest,
    crash: &mut dyn FnMut() -> bool,
) -> Result<(), ManifestError> {
    manifest.updated_at = now_utc();
    let mut bytes = serde_json::to_vec_pretty(manifest).map_err(|e| ManifestError::Corrupt {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    bytes.push(b'\n');
    fsutil::atomic_write_with_crash_hook(path, &bytes, crash).map_err(|source| {
        ManifestError::Io {
            path: path.to_path_buf(),
            source,
        }
    })
}
