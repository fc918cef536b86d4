//! Wire types shared by the registry service and its clients.
//!
//! Field names follow the registry's JSON contract (snake_case), unlike the
//! manifest's camelCase; each format matches its own on-disk schema.

use serde::{Deserialize, Serialize};

pub use crate::skillset::RemoteSkillRef;

/// Trust tier of a registry record: `verified` is reserved for officially
/// seeded skills, `community` is the default for authenticated submissions.
/// Informational only; never blocks installation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustTier {
    Verified,
    Community,
}

impl TrustTier {
    pub fn as_str(self) -> &'static str {
        match self {
            TrustTier::Verified => "verified",
            TrustTier::Community => "community",
        }
    }

    pub fn parse(text: &str) -> Option<TrustTier> {
        match text {
            "verified" => Some(TrustTier::Verified),
            "community" => Some(TrustTier::Community),
            _ => None,
        }
    }
}

impl std::fmt::Display for TrustTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A registered publisher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publisher {
    pub id: String,
    pub github_handle: String,
    pub verified: bool,
}

/// Registry metadata for one skill. The registry stores metadata only;
/// `source_url` points at where the skill content actually lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillRecord {
    pub id: String,
    pub name: String,
    pub description: String,
    pub source_url: String,
    pub trust_tier: TrustTier,
    pub score: u32,
    pub spec_version: String,
    pub tags: Vec<String>,
    pub install_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_by: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
}

/// Registry metadata for one skillset. `skill_count` is derived from
/// `skill_refs` and recomputed on load, never stored independently.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillsetRecord {
    pub id: String,
    pub name: String,
    pub description: String,
    pub source_url: String,
    pub trust_tier: TrustTier,
    pub score: u32,
    pub spec_version: String,
    pub tags: Vec<String>,
    pub install_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_by: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    pub skill_refs: Vec<RemoteSkillRef>,
    #[serde(default)]
    pub skill_count: usize,
}

impl SkillsetRecord {
    /// Re-derive `skill_count` from `skill_refs`.
    pub fn recompute_skill_count(&mut self) {
        self.skill_count = self.skill_refs.len();
    }
}

/// Response of the install-info endpoints: the record plus its source URL,
/// after the install counter has been bumped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillInstallInfo {
    pub record: SkillRecord,
    pub source_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillsetInstallInfo {
    pub record: SkillsetRecord,
    pub source_url: String,
}

/// Body of a publish request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishRequest {
    pub name: String,
    pub source_url: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

/// The registry's error body: `{"error": {"code", "message"}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

/// Response of `GET /spec-versions`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecVersions {
    pub versions: Vec<String>,
    pub current: String,
}
