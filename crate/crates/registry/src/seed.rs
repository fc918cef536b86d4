//! Seeding the verified tier from registered sources.
//!
//! Each registered source is fetched, validated, and upserted with
//! `trust_tier = verified`. Upserts preserve record identity and install
//! counts, so re-seeding an unchanged source leaves the store file
//! byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use skilldex_core::document;
use skilldex_core::install;
use skilldex_core::registry::types::{SkillRecord, SkillsetRecord, TrustTier};
use skilldex_core::skillset;
use skilldex_core::validate;

use crate::fetch::{self, FetchedSource};
use crate::store::Store;

/// A registered seeding source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedSource {
    pub source_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subpath: Option<String>,
    pub kind: SeedKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    Skill,
    Skillset,
}

/// Outcome of one seeding run.
#[derive(Debug, Default, Serialize)]
pub struct SeedReport {
    pub upserted: Vec<String>,
    pub failures: Vec<SeedFailure>,
}

#[derive(Debug, Serialize)]
pub struct SeedFailure {
    pub source_url: String,
    pub error: String,
}

/// Fetch, validate, and upsert every source. Per-source failures are
/// recorded and the remaining sources still run.
pub fn seed_sources(store: &Store, sources: &[SeedSource], test_mode: bool) -> SeedReport {
    let mut report = SeedReport::default();
    for source in sources {
        match seed_one(store, source, test_mode) {
            Ok(mut names) => report.upserted.append(&mut names),
            Err(error) => report.failures.push(SeedFailure {
                source_url: source.source_url.clone(),
                error,
            }),
        }
    }
    report
}

fn seed_one(store: &Store, source: &SeedSource, test_mode: bool) -> Result<Vec<String>, String> {
    let fetched = fetch::fetch_source(&source.source_url, source.subpath.as_deref(), test_mode)
        .map_err(|e| e.to_string())?;

    match source.kind {
        SeedKind::Skill => seed_skills(store, source, &fetched),
        SeedKind::Skillset => seed_skillset(store, source, &fetched),
    }
}

fn seed_skills(
    store: &Store,
    source: &SeedSource,
    fetched: &FetchedSource,
) -> Result<Vec<String>, String> {
    let dirs = install::discover_skill_dirs(&fetched.root);
    if dirs.is_empty() {
        return Err("no skill directories found at source".to_string());
    }
    let mut names = Vec::new();
    for dir in dirs {
        let result = validate::validate_skill(&dir).map_err(|e| e.to_string())?;
        let doc = read_document(&dir.join("SKILL.md"))?;
        let name = match doc.scalar("name").map(str::trim) {
            Some(n) if !n.is_empty() => n.to_string(),
            _ => {
                return Err(format!(
                    "skill at {} has no usable name (fatal frontmatter)",
                    dir.display()
                ));
            }
        };
        let record_url = record_source_url(source, fetched, &dir);
        store
            .mutate(|m| {
                let record = match m.skill(&name) {
                    Some(existing) => SkillRecord {
                        description: doc.scalar("description").unwrap_or("").to_string(),
                        source_url: record_url.clone(),
                        trust_tier: TrustTier::Verified,
                        score: result.score,
                        spec_version: result.spec_version.clone(),
                        tags: tags_of(&doc),
                        author: doc.scalar("author").map(str::to_string),
                        ..existing.clone()
                    },
                    None => SkillRecord {
                        id: uuid::Uuid::new_v4().to_string(),
                        name: name.clone(),
                        description: doc.scalar("description").unwrap_or("").to_string(),
                        source_url: record_url.clone(),
                        trust_tier: TrustTier::Verified,
                        score: result.score,
                        spec_version: result.spec_version.clone(),
                        tags: tags_of(&doc),
                        install_count: 0,
                        published_by: None,
                        author: doc.scalar("author").map(str::to_string),
                    },
                };
                m.replace_skill(record);
                Ok(())
            })
            .map_err(|e| e.to_string())?;
        names.push(name);
    }
    Ok(names)
}

fn seed_skillset(
    store: &Store,
    source: &SeedSource,
    fetched: &FetchedSource,
) -> Result<Vec<String>, String> {
    let dir = fetch::find_skillset_dir(&fetched.root)
        .ok_or_else(|| "no SKILLSET.md found at source".to_string())?;
    let result = validate::validate_skillset(&dir).map_err(|e| e.to_string())?;
    if result.error_count > 0 {
        return Err(format!(
            "skillset validation failed: {}",
            result.problem_messages().join("; ")
        ));
    }
    let doc = read_document(&dir.join("SKILLSET.md"))?;
    let name = result.subject.clone();
    let refs = skillset::remote_refs_of(&doc);
    let record_url = record_source_url(source, fetched, &dir);

    store
        .mutate(|m| {
            let record = match m.skillset(&name) {
                Some(existing) => SkillsetRecord {
                    description: doc.scalar("description").unwrap_or("").to_string(),
                    source_url: record_url.clone(),
                    trust_tier: TrustTier::Verified,
                    score: result.score,
                    spec_version: result.spec_version.clone(),
                    tags: tags_of(&doc),
                    author: doc.scalar("author").map(str::to_string),
                    skill_refs: refs.clone(),
                    ..existing.clone()
                },
                None => SkillsetRecord {
                    id: uuid::Uuid::new_v4().to_string(),
                    name: name.clone(),
                    description: doc.scalar("description").unwrap_or("").to_string(),
                    source_url: record_url.clone(),
                    trust_tier: TrustTier::Verified,
                    score: result.score,
                    spec_version: result.spec_version.clone(),
                    tags: tags_of(&doc),
                    install_count: 0,
                    published_by: None,
                    author: doc.scalar("author").map(str::to_string),
                    skill_refs: refs.clone(),
                    skill_count: refs.len(),
                },
            };
            m.replace_skillset(record);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(vec![name])
}

fn read_document(path: &Path) -> Result<document::SkillDocument, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    document::parse_skill_document(&text).map_err(|e| e.to_string())
}

fn tags_of(doc: &document::SkillDocument) -> Vec<String> {
    doc.frontmatter
        .get("tags")
        .and_then(|v| v.as_list())
        .map(|l| l.to_vec())
        .unwrap_or_default()
}

/// The source URL stored on a seeded record. Local test-mode sources point
/// at the exact validated directory so installs fetch precisely that skill;
/// cloned sources reconstruct a `git+` tree URL when the skill lives in a
/// subdirectory.
fn record_source_url(source: &SeedSource, fetched: &FetchedSource, dir: &Path) -> String {
    if fetched.repo_url.is_none() {
        // Local filesystem source.
        return dir.display().to_string();
    }
    let repo_url = fetched.repo_url.as_deref().unwrap();
    let checkout_root = fetched
        .root
        .ancestors()
        .find(|p| p.join(".git").exists())
        .unwrap_or(&fetched.root);
    let rel = dir.strip_prefix(checkout_root).ok();
    match (rel, &fetched.branch) {
        (Some(rel), Some(branch)) if rel.as_os_str().is_empty() => {
            let _ = branch;
            source.source_url.clone()
        }
        (Some(rel), Some(branch)) => {
            format!("git+{}/tree/{}/{}", repo_url, branch, rel.display())
        }
        _ => source.source_url.clone(),
    }
}
