//! The embedded document store backing the registry.
//!
//! All records live in memory under one lock and are flushed to a single
//! JSON file (temp file + rename) after every mutation. Uniqueness is by
//! map key: skills and skillsets by name, publishers by GitHub handle.
//! Serialization is deterministic (sorted maps, stable field order), so an
//! upsert that changes nothing leaves the file bytes unchanged.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use skilldex_core::fsutil;
use skilldex_core::registry::types::{Publisher, SkillRecord, SkillsetRecord};

use crate::seed::SeedSource;

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
struct StoreData {
    /// Publishers keyed by github_handle (unique).
    publishers: BTreeMap<String, Publisher>,
    /// Skills keyed by name (unique).
    skills: BTreeMap<String, SkillRecord>,
    /// Skillsets keyed by name (unique).
    skillsets: BTreeMap<String, SkillsetRecord>,
    /// Registered seeding sources.
    #[serde(default)]
    seed_sources: Vec<SeedSource>,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt store file {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },
    #[error("constraint violation: {0}")]
    Constraint(String),
}

/// The registry's document store. All mutations serialize through one lock
/// and persist before returning.
pub struct Store {
    path: PathBuf,
    data: Mutex<StoreData>,
}

impl Store {
    /// Open (or create) the store at `path`.
    pub fn open(path: &Path) -> Result<Store, StoreError> {
        let data = match std::fs::read_to_string(path) {
            Ok(text) => {
                let mut data: StoreData =
                    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                        path: path.to_path_buf(),
                        detail: e.to_string(),
                    })?;
                // skill_count is derived, never trusted from disk.
                for record in data.skillsets.values_mut() {
                    record.recompute_skill_count();
                }
                validate(&data)?;
                data
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => StoreData::default(),
            Err(source) => {
                return Err(StoreError::Io {
                    path: path.to_path_buf(),
                    source,
                });
            }
        };
        Ok(Store {
            path: path.to_path_buf(),
            data: Mutex::new(data),
        })
    }

    fn persist(&self, data: &StoreData) -> Result<(), StoreError> {
        let mut bytes = serde_json::to_vec_pretty(data).expect("store serializes");
        bytes.push(b'\n');
        fsutil::atomic_write(&self.path, &bytes).map_err(|source| StoreError::Io {
            path: self.path.clone(),
            source,
        })
    }

    /// Run a read-only closure over the store contents.
    pub fn read<T>(&self, f: impl FnOnce(&StoreView<'_>) -> T) -> T {
        let data = self.data.lock().expect("store lock");
        f(&StoreView { data: &data })
    }

    /// Run a mutation transactionally: the closure works on a copy, and the
    /// copy replaces the live data only after constraint checks pass and the
    /// file is rewritten. A failed mutation leaves memory and disk untouched.
    pub fn mutate<T>(
        &self,
        f: impl FnOnce(&mut StoreMut<'_>) -> Result<T, StoreError>,
    ) -> Result<T, StoreError> {
        let mut data = self.data.lock().expect("store lock");
        let mut staged = data.clone();
        let out = f(&mut StoreMut { data: &mut staged })?;
        validate(&staged)?;
        self.persist(&staged)?;
        *data = staged;
        Ok(out)
    }
}

/// Field constraints mirroring the relational schema's CHECKs.
fn validate(data: &StoreData) -> Result<(), StoreError> {
    for (handle, publisher) in &data.publishers {
        if publisher.github_handle != *handle {
            return Err(StoreError::Constraint(format!(
                "publisher key {:?} does not match handle {:?}",
                handle, publisher.github_handle
            )));
        }
    }
    for (name, record) in &data.skills {
        if record.name != *name {
            return Err(StoreError::Constraint(format!(
                "skill key {:?} does not match record name",
                name
            )));
        }
        if record.score > 100 {
            return Err(StoreError::Constraint(format!(
                "skill {:?} score {} out of range 0-100",
                name, record.score
            )));
        }
    }
    for (name, record) in &data.skillsets {
        if record.name != *name {
            return Err(StoreError::Constraint(format!(
                "skillset key {:?} does not match record name",
                name
            )));
        }
        if record.score > 100 {
            return Err(StoreError::Constraint(format!(
                "skillset {:?} score {} out of range 0-100",
                name, record.score
            )));
        }
        if record.skill_count != record.skill_refs.len() {
            return Err(StoreError::Constraint(format!(
                "skillset {:?} skill_count desynchronized",
                name
            )));
        }
    }
    Ok(())
}

/// Read-only view of the store contents.
pub struct StoreView<'a> {
    data: &'a StoreData,
}

impl StoreView<'_> {
    pub fn skills(&self) -> impl Iterator<Item = &SkillRecord> {
        self.data.skills.values()
    }

    pub fn skillsets(&self) -> impl Iterator<Item = &SkillsetRecord> {
        self.data.skillsets.values()
    }

    pub fn skill(&self, name: &str) -> Option<&SkillRecord> {
        self.data.skills.get(name)
    }

    pub fn skillset(&self, name: &str) -> Option<&SkillsetRecord> {
        self.data.skillsets.get(name)
    }

    pub fn publisher(&self, handle: &str) -> Option<&Publisher> {
        self.data.publishers.get(handle)
    }

    pub fn seed_sources(&self) -> &[SeedSource] {
        &self.data.seed_sources
    }
}

/// Mutable view used inside [`Store::mutate`].
pub struct StoreMut<'a> {
    data: &'a mut StoreData,
}

impl StoreMut<'_> {
    pub fn skill(&self, name: &str) -> Option<&SkillRecord> {
        self.data.skills.get(name)
    }

    pub fn skillset(&self, name: &str) -> Option<&SkillsetRecord> {
        self.data.skillsets.get(name)
    }

    /// Insert a new skill; the name must be free.
    pub fn insert_skill(&mut self, record: SkillRecord) -> Result<(), StoreError> {
        if self.data.skills.contains_key(&record.name) {
            return Err(StoreError::Constraint(format!(
                "skill {:?} already exists",
                record.name
            )));
        }
        self.data.skills.insert(record.name.clone(), record);
        Ok(())
    }

    /// Replace an existing skill record (same name).
    pub fn replace_skill(&mut self, record: SkillRecord) {
        self.data.skills.insert(record.name.clone(), record);
    }

    pub fn remove_skill(&mut self, name: &str) -> Option<SkillRecord> {
        self.data.skills.remove(name)
    }

    pub fn insert_skillset(&mut self, mut record: SkillsetRecord) -> Result<(), StoreError> {
        if self.data.skillsets.contains_key(&record.name) {
            return Err(StoreError::Constraint(format!(
                "skillset {:?} already exists",
                record.name
            )));
        }
        record.recompute_skill_count();
        self.data.skillsets.insert(record.name.clone(), record);
        Ok(())
    }

    pub fn replace_skillset(&mut self, mut record: SkillsetRecord) {
        record.recompute_skill_count();
        self.data.skillsets.insert(record.name.clone(), record);
    }

    pub fn remove_skillset(&mut self, name: &str) -> Option<SkillsetRecord> {
        self.data.skillsets.remove(name)
    }

    /// Bump a skill's install counter, returning the updated record.
    pub fn increment_skill_installs(&mut self, name: &str) -> Option<SkillRecord> {
        let record = self.data.skills.get_mut(name)?;
        record.install_count += 1;
        Some(record.clone())
    }

    pub fn increment_skillset_installs(&mut self, name: &str) -> Option<SkillsetRecord> {
        let record = self.data.skillsets.get_mut(name)?;
        record.install_count += 1;
        Some(record.clone())
    }

    /// Fetch-or-create a publisher row for a GitHub handle.
    pub fn ensure_publisher(&mut self, handle: &str, verified: bool) -> Publisher {
        if let Some(existing) = self.data.publishers.get(handle) {
            return existing.clone();
        }
        let publisher = Publisher {
            id: uuid::Uuid::new_v4().to_string(),
            github_handle: handle.to_string(),
            verified,
        };
        self.data
            .publishers
            .insert(handle.to_string(), publisher.clone());
        publisher
    }

    pub fn add_seed_source(&mut self, source: SeedSource) {
        self.data.seed_sources.push(source);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skilldex_core::registry::types::TrustTier;
    use tempfile::TempDir;

    fn record(name: &str) -> SkillRecord {
        SkillRecord {
            id: uuid::Uuid::new_v4().to_string(),
            name: name.to_string(),
            description: "desc".to_string(),
            source_url: "https://github.com/u/r".to_string(),
            trust_tier: TrustTier::Community,
            score: 90,
            spec_version: "1.0".to_string(),
            tags: vec!["t".to_string()],
            install_count: 0,
            published_by: None,
            author: None,
        }
    }

    #[test]
    fn persists_and_reloads_identically() {
        let tmp = TempDir::new().unwrap();
        let path = tmp.path().join("store.json");
        let store = Store::open(&path).unwrap();
        store.mutate(|m| m.insert_skill(record("alpha"))).unwrap();
        store.mutate(|m| m.insert_skill(record("beta"))).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let reopened = Store::open(&path).unwrap();
        assert_eq!(reopened.read(|v| v.skills().count()), 2);
        // Re-persisting unchanged data produces identical bytes.
        reopened.mutate(|_| Ok(())).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn duplicate_names_rejected() {
        let tmp = TempDir::new().unwrap();
        let store = Store::open(&tmp.path().join("s.json")).unwrap();
        store.mutate(|m| m.insert_skill(record("x"))).unwrap();
        assert!(store.mutate(|m| m.insert_skill(record("x"))).is_err());
    }

    #[test]
    fn score_constraint_enforced() {
        let tmp = TempDir::new().unwrap();
        let store = Store::open(&tmp.path().join("s.json")).unwrap();
        let mut bad = record("bad");
        bad.score = 101;
        assert!(matches!(
            store.mutate(|m| m.insert_skill(bad)),
            Err(StoreError::Constraint(_))
        ));
        // The failed mutation was not persisted.
        assert_eq!(store.read(|v| v.skills().count()), 0);
    }

    #[test]
    fn install_counter_increments() {
        let tmp = TempDir::new().unwrap();
        let store = Store::open(&tmp.path().join("s.json")).unwrap();
        store.mutate(|m| m.insert_skill(record("c"))).unwrap();
        for expected in 1..=5u64 {
            let updated = store
                .mutate(|m| Ok(m.increment_skill_installs("c")))
                .unwrap()
                .unwrap();
            assert_eq!(updated.install_count, expected);
        }
    }

    #[test]
    fn skill_count_recomputed_on_load() {
        let tmp = TempDir::new().unwrap();
        let path = tmp.path().join("s.json");
        // A file with a lying skill_count.
        let doc = serde_json::json!({
            "publishers": {},
            "skills": {},
            "skillsets": {"b": {
                "id": "1", "name": "b", "description": "d",
                "source_url": "https://github.com/u/r", "trust_tier": "verified",
                "score": 100, "spec_version": "1.0", "tags": [],
                "install_count": 0,
                "skill_refs": [{"name": "x", "source_url": "https://github.com/u/x"}],
                "skill_count": 7
            }},
            "seed_sources": []
        });
        std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        let store = Store::open(&path).unwrap();
        assert_eq!(store.read(|v| v.skillset("b").unwrap().skill_count), 1);
    }
}
