//! Skillset parsing and install orchestration.
//!
//! A skillset is a directory rooted at a `SKILLSET.md` whose frontmatter
//! mirrors a skill's, plus an optional `skills` list of remote references.
//! Embedded skills (direct child directories containing `SKILL.md`) are
//! auto-discovered. Installing a skillset is orchestration, not a new
//! primitive: every member skill goes through the installer's own
//! local-path routine, and a failure mid-way rolls the scope back to its
//! pre-invocation state.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{self, FrontmatterValue, SkillDocument};
use crate::fsutil;
use crate::install::{
    self, parse_install_source, InstallError, InstallOptions, InstallSource, InstalledEntry,
};
use crate::manifest::{self, InstalledSkillset, ManifestError, SourceTag};
use crate::registry::client::{ClientError, RegistryClient};
use crate::registry::types::TrustTier;
use crate::scope::{self, ScopeContext, ScopeError, ScopeLevel};
use crate::validate::{self, ValidateError, ValidationResult};

/// A remote skill reference from a skillset's `skills` frontmatter list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteSkillRef {
    pub name: String,
    pub source_url: String,
}

/// A parsed skillset directory.
#[derive(Debug, Clone)]
pub struct SkillsetDocument {
    pub document: SkillDocument,
    pub embedded_skill_dirs: Vec<PathBuf>,
    pub remote_refs: Vec<RemoteSkillRef>,
    pub assets_dir: Option<PathBuf>,
}

/// Outcome of a skillset install.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SkillsetInstallReport {
    pub name: String,
    pub score: u32,
    pub scope: ScopeLevel,
    pub installed_skills: Vec<InstalledEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SkillsetError {
    #[error("skillset validation failed with {} error(s); aborting install", .0.error_count)]
    Validation(ValidationResult),
    #[error("skillset {name:?} is already installed at {scope} scope (use --force to replace)")]
    AlreadyInstalled { name: String, scope: ScopeLevel },
    #[error("skillset {name:?} is not installed at {scope} scope")]
    NotInstalled { name: String, scope: ScopeLevel },
    #[error("skillset {name:?} has no recorded source URL to update from")]
    NoSourceUrl { name: String },
    #[error("skillset {0:?} not found in the registry")]
    NotInRegistry(String),
    #[error("target already exists: {0}")]
    Exists(PathBuf),
    #[error(transparent)]
    Install(#[from] InstallError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("registry request failed: {0}")]
    Client(#[from] ClientError),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SkillsetError {
    pub fn code(&self) -> &'static str {
        match self {
            SkillsetError::Validation(_) => "E_SKILLSET_VALIDATION",
            SkillsetError::AlreadyInstalled { .. } => "E_ALREADY_INSTALLED",
            SkillsetError::NotInstalled { .. } => "E_NOT_INSTALLED",
            SkillsetError::NoSourceUrl { .. } => "E_NO_SOURCE_URL",
            SkillsetError::NotInRegistry(_) => "E_NOT_IN_REGISTRY",
            SkillsetError::Exists(_) => "E_EXISTS",
            SkillsetError::Install(e) => e.code(),
            SkillsetError::Validate(e) => e.code(),
            SkillsetError::Scope(e) => e.code(),
            SkillsetError::Manifest(e) => e.code(),
            SkillsetError::Client(e) => e.code(),
            SkillsetError::Io { .. } => "E_IO",
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> SkillsetError {
    SkillsetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Direct child directories of `skillset_dir` containing a `SKILL.md`,
/// sorted lexicographically. No recursion; hidden directories are skipped.
pub fn discover_embedded_skills(skillset_dir: &Path) -> Vec<PathBuf> {
    fsutil::child_dirs(skillset_dir)
        .unwrap_or_default()
        .into_iter()
        .filter(|d| !fsutil::is_hidden(d))
        .filter(|d| d.join("SKILL.md").is_file())
        .collect()
}

/// Remote references from a parsed document's `skills` list. Entries missing
/// either key are dropped; validation reports them separately.
pub fn remote_refs_of(doc: &SkillDocument) -> Vec<RemoteSkillRef> {
    match doc.frontmatter.get("skills") {
        Some(FrontmatterValue::EntryList(entries)) => entries
            .iter()
            .filter_map(|e| {
                Some(RemoteSkillRef {
                    name: e.get("name")?.clone(),
                    source_url: e.get("source_url")?.clone(),
                })
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// Parse a skillset directory into its document, embedded skill dirs,
/// remote refs, and shared assets directory.
pub fn parse_skillset_dir(skillset_dir: &Path) -> Result<SkillsetDocument, SkillsetError> {
    let file = skillset_dir.join("SKILLSET.md");
    if !file.is_file() {
        return Err(ValidateError::NoSkillsetFile(skillset_dir.to_path_buf()).into());
    }
    let text = std::fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
    let document = document::parse_skill_document(&text).map_err(|_| {
        // An unparseable skillset surfaces through validation's fatal path.
        SkillsetError::Validation(
            validate::validate_skillset(skillset_dir).unwrap_or_else(|_| ValidationResult {
                subject: skillset_dir.display().to_string(),
                score: 0,
                diagnostics: vec![],
                spec_version: validate::BUILTIN_SPEC_VERSION.to_string(),
                pass_count: 0,
                warn_count: 0,
                error_count: 1,
            }),
        )
    })?;
    let assets = skillset_dir.join("assets");
    Ok(SkillsetDocument {
        embedded_skill_dirs: discover_embedded_skills(skillset_dir),
        remote_refs: remote_refs_of(&document),
        assets_dir: assets.is_dir().then_some(assets),
        document,
    })
}

/// Undo log for a partially completed skillset install.
struct RollbackGuard {
    manifest_path: PathBuf,
    manifest_before: Option<Vec<u8>>,
    swaps: Vec<install::SwapBackup>,
}

impl RollbackGuard {
    fn snapshot(manifest_path: &Path) -> Result<Self, SkillsetError> {
        let manifest_before = match std::fs::read(manifest_path) {
            Ok(bytes) => Some(bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(io_err(manifest_path, e)),
        };
        Ok(RollbackGuard {
            manifest_path: manifest_path.to_path_buf(),
            manifest_before,
            swaps: Vec::new(),
        })
    }

    /// Restore the manifest bytes and undo every directory swap.
    fn rollback(self) {
        for swap in self.swaps.into_iter().rev() {
            swap.rollback();
        }
        match self.manifest_before {
            Some(bytes) => {
                let _ = fsutil::atomic_write(&self.manifest_path, &bytes);
            }
            None => {
                let _ = std::fs::remove_file(&self.manifest_path);
            }
        }
    }

    /// Keep everything; discard backups.
    fn commit(self) {
        for swap in self.swaps {
            swap.commit();
        }
    }
}

/// Install a skillset from a local directory, following the six-step
/// orchestration: validate (abort on errors), discover embedded skills,
/// install each embedded skill, install each remote reference, copy
/// `SKILLSET.md` plus shared assets into the scope, and record the manifest
/// entry. A failure in the middle rolls the scope back.
pub fn install_skillset_from_path(
    skillset_dir: &Path,
    options: &InstallOptions,
    ctx: &ScopeContext,
) -> Result<SkillsetInstallReport, SkillsetError> {
    // Step 1: validate; error-severity diagnostics abort (unlike single-skill
    // installs, which only warn).
    let result = validate::validate_skillset(skillset_dir)?;
    if result.error_count > 0 {
        return Err(SkillsetError::Validation(result));
    }
    let parsed = parse_skillset_dir(skillset_dir)?;
    let name = result.subject.clone();
    let version = match parsed.document.scalar("version").map(str::trim) {
        Some(v) if !v.is_empty() => v.to_string(),
        _ => "0.0.0".to_string(),
    };

    let config = scope::resolve_scope(options.scope, ctx)?;
    let target = config.skillsets_dir.join(&name);
    {
        let loaded = manifest::load_manifest(&config.manifest_path, config.level)?;
        if (loaded.manifest.skillsets.contains_key(&name) || target.exists()) && !options.force {
            return Err(SkillsetError::AlreadyInstalled {
                name,
                scope: options.scope,
            });
        }
    }

    let mut guard = RollbackGuard::snapshot(&config.manifest_path)?;
    let mut warnings: Vec<String> = result.problem_messages();
    let mut embedded_names: Vec<String> = Vec::new();
    let mut remote_names: Vec<String> = Vec::new();
    let mut installed: Vec<InstalledEntry> = Vec::new();

    // Steps 2-3: embedded skills through the installer's own routine.
    for dir in &parsed.embedded_skill_dirs {
        match install::install_from_path_raw(dir, options, ctx) {
            Ok(effect) => {
                warnings.extend(effect.warnings.clone());
                embedded_names.push(effect.name.clone());
                installed.push(effect.entry());
                guard.swaps.push(effect.swap);
            }
            Err(e) => {
                guard.rollback();
                return Err(e.into());
            }
        }
    }

    // Step 4: remote references, cloned then installed through the same
    // routine.
    for remote in &parsed.remote_refs {
        let outcome = install_remote_ref(remote, options, ctx);
        match outcome {
            Ok(effects) => {
                for effect in effects {
                    warnings.extend(effect.warnings.clone());
                    remote_names.push(effect.name.clone());
                    installed.push(effect.entry());
                    guard.swaps.push(effect.swap);
                }
            }
            Err(e) => {
                guard.rollback();
                return Err(e);
            }
        }
    }

    // Step 5: copy SKILLSET.md and the shared assets directory.
    let step5 = (|| -> Result<(), SkillsetError> {
        let bundle = tempfile::tempdir().map_err(|e| io_err(skillset_dir, e))?;
        std::fs::copy(
            skillset_dir.join("SKILLSET.md"),
            bundle.path().join("SKILLSET.md"),
        )
        .map_err(|e| io_err(skillset_dir, e))?;
        if let Some(assets) = &parsed.assets_dir {
            fsutil::copy_dir_recursive(assets, &bundle.path().join("assets"))
                .map_err(|e| io_err(assets, e))?;
        }
        let swap = install::stage_and_swap(bundle.path(), &target, options.force, || {
            InstallError::AlreadyInstalled {
                name: name.clone(),
                scope: options.scope,
            }
        })?;
        guard.swaps.push(swap);
        Ok(())
    })();
    if let Err(e) = step5 {
        guard.rollback();
        return Err(e);
    }

    // Step 6: record the skillset, listing embedded and remote skill names.
    let mut loaded = manifest::load_manifest(&config.manifest_path, config.level)?;
    loaded.manifest.skillsets.insert(
        name.clone(),
        InstalledSkillset {
            name: name.clone(),
            version,
            source: options.source_tag,
            source_url: options.source_url.clone(),
            installed_at: manifest::now_utc(),
            spec_version: result.spec_version.clone(),
            score: result.score,
            path: format!("skillsets/{}", name),
            embedded_skills: embedded_names,
            remote_skills: remote_names,
        },
    );
    if let Err(e) = manifest::save_manifest(&config.manifest_path, &mut loaded.manifest) {
        guard.rollback();
        return Err(e.into());
    }

    guard.commit();
    Ok(SkillsetInstallReport {
        name,
        score: result.score,
        scope: options.scope,
        installed_skills: installed,
        warnings,
    })
}

/// Clone one remote reference and run the raw install for each skill found.
fn install_remote_ref(
    remote: &RemoteSkillRef,
    options: &InstallOptions,
    ctx: &ScopeContext,
) -> Result<Vec<install::InstallEffect>, SkillsetError> {
    let git_ref = if remote.source_url.starts_with("git+") {
        install::parse_git_url(&remote.source_url)?
    } else {
        install::GitRef {
            repo_url: remote.source_url.clone(),
            branch: None,
            subpath: None,
        }
    };
    let (_tmp, root) = install::fetch_git_to_temp(&git_ref)?;
    let dirs = install::discover_skill_dirs(&root);
    if dirs.is_empty() {
        return Err(InstallError::NoSkillsFound(root).into());
    }
    let options = InstallOptions {
        source_url: Some(remote.source_url.clone()),
        ..options.clone()
    };
    let mut effects = Vec::new();
    for dir in dirs {
        match install::install_from_path_raw(&dir, &options, ctx) {
            Ok(effect) => effects.push(effect),
            Err(e) => {
                for done in effects.into_iter().rev() {
                    done.swap.rollback();
                }
                return Err(e.into());
            }
        }
    }
    Ok(effects)
}

/// Install a skillset from a path, registry name, or `git+https://` URL.
pub fn install_skillset(
    source_spec: &str,
    options: &InstallOptions,
    ctx: &ScopeContext,
    client: &RegistryClient,
) -> Result<SkillsetInstallReport, SkillsetError> {
    match parse_install_source(source_spec)? {
        InstallSource::LocalPath(path) => install_skillset_from_path(&path, options, ctx),
        InstallSource::Git(git_ref) => {
            let (_tmp, root) = install::fetch_git_to_temp(&git_ref)?;
            let dir = find_skillset_dir(&root)
                .ok_or_else(|| SkillsetError::Validate(ValidateError::NoSkillsetFile(root)))?;
            install_skillset_from_path(&dir, options, ctx)
        }
        InstallSource::RegistryName(name) => {
            let info = client.skillset_install_info(&name).map_err(|e| match e {
                ClientError::Http { status: 404, .. } => SkillsetError::NotInRegistry(name.clone()),
                other => SkillsetError::Client(other),
            })?;
            let options = InstallOptions {
                source_tag: match info.record.trust_tier {
                    TrustTier::Verified => SourceTag::Official,
                    TrustTier::Community => SourceTag::Community,
                },
                source_url: Some(info.source_url.clone()),
                ..options.clone()
            };
            install_skillset_from_source_url(&info.source_url, &options, ctx)
        }
    }
}

/// Install a skillset from an already-known source URL: a local directory,
/// a `git+https://` URL, or a plain clone URL.
pub fn install_skillset_from_source_url(
    source_url: &str,
    options: &InstallOptions,
    ctx: &ScopeContext,
) -> Result<SkillsetInstallReport, SkillsetError> {
    let as_path = Path::new(source_url);
    if as_path.is_dir() {
        let dir = find_skillset_dir(as_path).ok_or_else(|| {
            SkillsetError::Validate(ValidateError::NoSkillsetFile(as_path.to_path_buf()))
        })?;
        return install_skillset_from_path(&dir, options, ctx);
    }
    let git_ref = if source_url.starts_with("git+") {
        install::parse_git_url(source_url)?
    } else {
        install::GitRef {
            repo_url: source_url.to_string(),
            branch: None,
            subpath: None,
        }
    };
    let (_tmp, root) = install::fetch_git_to_temp(&git_ref)?;
    let dir = find_skillset_dir(&root)
        .ok_or_else(|| SkillsetError::Validate(ValidateError::NoSkillsetFile(root)))?;
    install_skillset_from_path(&dir, options, ctx)
}

/// Find the directory holding `SKILLSET.md`: the root itself, or a non-hidden
/// child up to two levels down.
fn find_skillset_dir(root: &Path) -> Option<PathBuf> {
    if root.join("SKILLSET.md").is_file() {
        return Some(root.to_path_buf());
    }
    let mut queue = vec![(root.to_path_buf(), 1usize)];
    let mut found = Vec::new();
    while let Some((dir, depth)) = queue.pop() {
        for child in fsutil::child_dirs(&dir).unwrap_or_default() {
            if fsutil::is_hidden(&child) {
                continue;
            }
            if child.join("SKILLSET.md").is_file() {
                found.push(child);
            } else if depth < 2 {
                queue.push((child, depth + 1));
            }
        }
    }
    found.sort();
    found.into_iter().next()
}

/// Remove a skillset, its listed member skills, and its manifest entry from
/// one scope. Members already absent produce warnings, not errors.
pub fn uninstall_skillset(
    name: &str,
    level: ScopeLevel,
    ctx: &ScopeContext,
) -> Result<Vec<String>, SkillsetError> {
    let config = scope::resolve_scope(level, ctx)?;
    let mut loaded = manifest::load_manifest(&config.manifest_path, level)?;
    let entry = loaded.manifest.skillsets.remove(name).ok_or_else(|| {
        SkillsetError::NotInstalled {
            name: name.to_string(),
            scope: level,
        }
    })?;

    let mut warnings = Vec::new();
    for skill in entry.embedded_skills.iter().chain(entry.remote_skills.iter()) {
        if loaded.manifest.skills.remove(skill).is_none() {
            warnings.push(format!("skill {:?} was already absent from the manifest", skill));
        }
        let dir = config.skills_dir.join(skill);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        } else {
            warnings.push(format!("skill directory {:?} was already absent", skill));
        }
    }

    let set_dir = config.skillsets_dir.join(name);
    if set_dir.exists() {
        std::fs::remove_dir_all(&set_dir).map_err(|e| io_err(&set_dir, e))?;
    }

    manifest::save_manifest(&config.manifest_path, &mut loaded.manifest)?;
    Ok(warnings)
}

/// Re-install a skillset from its recorded source URL: uninstall, then
/// install fresh.
pub fn update_skillset(
    name: &str,
    level: ScopeLevel,
    ctx: &ScopeContext,
) -> Result<SkillsetInstallReport, SkillsetError> {
    let config = scope::resolve_scope(level, ctx)?;
    let loaded = manifest::load_manifest(&config.manifest_path, level)?;
    let entry = loaded
        .manifest
        .skillsets
        .get(name)
        .ok_or_else(|| SkillsetError::NotInstalled {
            name: name.to_string(),
            scope: level,
        })?;
    let (source_tag, source_url) = match (&entry.source, &entry.source_url) {
        (SourceTag::Local, _) | (_, None) => {
            return Err(SkillsetError::NoSourceUrl {
                name: name.to_string(),
            });
        }
        (tag, Some(url)) => (*tag, url.clone()),
    };

    uninstall_skillset(name, level, ctx)?;
    let options = InstallOptions {
        scope: level,
        force: true,
        source_tag,
        source_url: Some(source_url.clone()),
    };
    install_skillset_from_source_url(&source_url, &options, ctx)
}

/// Scaffold `<target_dir>/<name>/` with a valid `SKILLSET.md`, an empty
/// shared `assets/` directory, and one example embedded skill.
pub fn init_skillset(name: &str, target_dir: &Path) -> Result<PathBuf, SkillsetError> {
    let dest = target_dir.join(name);
    if dest.exists() {
        return Err(SkillsetError::Exists(dest));
    }
    std::fs::create_dir_all(dest.join("assets")).map_err(|e| io_err(&dest, e))?;
    std::fs::create_dir_all(dest.join("example-skill")).map_err(|e| io_err(&dest, e))?;

    let skillset_md = format!(
        "---\nname: {}\nversion: \"0.1.0\"\ndescription: \"Describe the shared purpose of this \
         skillset here. Explain which workflows the bundled skills cover, which shared assets \
         keep their outputs consistent, and when an agent should reach for them during a task.\"\n\
         tags: [starter]\nspec_version: \"1.0\"\n---\n\n## Overview\n\nDocument the skillset here. \
         Put files shared by several skills in `assets/` and add one directory per embedded \
         skill, each with its own `SKILL.md`.\n",
        name
    );
    std::fs::write(dest.join("SKILLSET.md"), skillset_md).map_err(|e| io_err(&dest, e))?;

    let skill_md = "---\nname: example-skill\nversion: \"0.1.0\"\ndescription: \"Demonstrates the \
                    expected layout of an embedded skill. Replace this description with at least \
                    thirty words explaining precisely what the skill does, the tools it relies \
                    on, and when the agent should trigger it.\"\ntags: [starter]\nspec_version: \
                    \"1.0\"\n---\n\n## Instructions\n\nReplace these instructions with the \
                    behavior the skill should produce.\n";
    std::fs::write(dest.join("example-skill/SKILL.md"), skill_md).map_err(|e| io_err(&dest, e))?;

    Ok(dest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use tempfile::TempDir;

    fn write(dir: &Path, rel: &str, contents: &str) {
        let path = dir.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, contents).unwrap();
    }

    #[test]
    fn discovers_direct_children_only() {
        let tmp = TempDir::new().unwrap();
        let dir = tmp.path();
        write(dir, "a/SKILL.md", "x");
        write(dir, "b/SKILL.md", "x");
        write(dir, "only-nested/inner/SKILL.md", "x");
        fs::create_dir_all(dir.join("assets")).unwrap();
        let found = discover_embedded_skills(dir);
        assert_eq!(found, vec![dir.join("a"), dir.join("b")]);
    }

    #[test]
    fn discovers_nothing_in_assets_only_dir() {
        let tmp = TempDir::new().unwrap();
        fs::create_dir_all(tmp.path().join("assets")).unwrap();
        assert!(discover_embedded_skills(tmp.path()).is_empty());
    }

    #[test]
    fn init_scaffold_validates_clean() {
        let tmp = TempDir::new().unwrap();
        let dest = init_skillset("my-bundle", tmp.path()).unwrap();
        let result = validate::validate_skillset(&dest).unwrap();
        assert_eq!(result.error_count, 0, "{:#?}", result.diagnostics);
        assert_eq!(result.score, 100);
        // The example skill itself validates well.
        let skill = validate::validate_skill(&dest.join("example-skill")).unwrap();
        assert!(skill.score >= 80, "{:#?}", skill.diagnostics);

        let mut entries: Vec<String> = fs::read_dir(&dest)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        entries.sort();
        assert_eq!(entries, vec!["SKILLSET.md", "assets", "example-skill"]);
    }

    #[test]
    fn init_twice_errors() {
        let tmp = TempDir::new().unwrap();
        init_skillset("dup", tmp.path()).unwrap();
        assert!(matches!(
            init_skillset("dup", tmp.path()),
            Err(SkillsetError::Exists(_))
        ));
    }

    #[test]
    fn remote_refs_parse_from_document() {
        let text = "---\nname: b\nskills:\n  - name: x\n    source_url: https://github.com/u/x\n---\n";
        let doc = document::parse_skill_document(text).unwrap();
        let refs = remote_refs_of(&doc);
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].name, "x");
    }
}
