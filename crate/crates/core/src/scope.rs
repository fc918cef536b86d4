//! The three-tier installation scope hierarchy.
//!
//! Skills install at one of three levels: `project` (under the project
//! root's `.skilldex/`), `shared` (`~/.skilldex/shared/`), or `global`
//! (`~/.skilldex/global/`). Name resolution is local-first: the lowest
//! scope containing a name wins. The `SKILLDEX_HOME` environment variable
//! relocates the entire `~/.skilldex` prefix, which keeps tests hermetic.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::{self, InstalledSkill, ManifestError};

/// Environment variable replacing the `<home>/.skilldex` prefix.
pub const HOME_ENV: &str = "SKILLDEX_HOME";

/// Manifest file name within each scope root.
pub const MANIFEST_FILE: &str = "skilldex.json";

/// An installation scope level. Ordering is precedence: lower wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeLevel {
    Project,
    Shared,
    Global,
}

impl ScopeLevel {
    /// All levels in precedence order (most local first).
    pub const ALL: [ScopeLevel; 3] = [ScopeLevel::Project, ScopeLevel::Shared, ScopeLevel::Global];

    pub fn as_str(self) -> &'static str {
        match self {
            ScopeLevel::Project => "project",
            ScopeLevel::Shared => "shared",
            ScopeLevel::Global => "global",
        }
    }

    /// Parse a scope name, accepting the single-letter shorthand.
    pub fn parse(text: &str) -> Option<ScopeLevel> {
        match text {
            "project" | "p" => Some(ScopeLevel::Project),
            "shared" | "s" => Some(ScopeLevel::Shared),
            "global" | "g" => Some(ScopeLevel::Global),
            _ => None,
        }
    }
}

impl std::fmt::Display for ScopeLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Concrete paths for one scope level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScopeConfig {
    pub level: ScopeLevel,
    pub root_path: PathBuf,
    pub manifest_path: PathBuf,
    pub skills_dir: PathBuf,
    pub skillsets_dir: PathBuf,
}

impl ScopeConfig {
    fn at(level: ScopeLevel, root: PathBuf) -> ScopeConfig {
        ScopeConfig {
            manifest_path: root.join(MANIFEST_FILE),
            skills_dir: root.join("skills"),
            skillsets_dir: root.join("skillsets"),
            level,
            root_path: root,
        }
    }
}

/// Resolved environment for scope computation: where `.skilldex` lives and
/// where the current invocation started.
#[derive(Debug, Clone)]
pub struct ScopeContext {
    /// The `~/.skilldex` directory (or its `SKILLDEX_HOME` override).
    pub skilldex_home: PathBuf,
    /// Directory the project-root walk starts from.
    pub start_dir: PathBuf,
}

impl ScopeContext {
    /// Build a context with an explicit home; used by tests and embedding.
    pub fn new(skilldex_home: impl Into<PathBuf>, start_dir: impl Into<PathBuf>) -> Self {
        ScopeContext {
            skilldex_home: skilldex_home.into(),
            start_dir: start_dir.into(),
        }
    }

    /// Build a context from the process environment: `SKILLDEX_HOME` if set,
    /// else `$HOME/.skilldex`.
    pub fn from_env(start_dir: impl Into<PathBuf>) -> Result<Self, ScopeError> {
        let skilldex_home = match std::env::var_os(HOME_ENV) {
            Some(home) if !home.is_empty() => PathBuf::from(home),
            _ => {
                let home = std::env::var_os("HOME").filter(|h| !h.is_empty());
                match home {
                    Some(home) => PathBuf::from(home).join(".skilldex"),
                    None => return Err(ScopeError::NoHome),
                }
            }
        };
        Ok(ScopeContext {
            skilldex_home,
            start_dir: start_dir.into(),
        })
    }
}

#[derive(Debug, Error)]
pub enum ScopeError {
    #[error("cannot determine a home directory (set {HOME_ENV} or HOME)")]
    NoHome,
    #[error("not a directory: {0}")]
    NotADirectory(PathBuf),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

impl ScopeError {
    pub fn code(&self) -> &'static str {
        match self {
            ScopeError::NoHome => "E_NO_HOME",
            ScopeError::NotADirectory(_) => "E_NOT_A_DIRECTORY",
            ScopeError::Manifest(e) => e.code(),
        }
    }
}

/// Walk `start_dir` and its ancestors for a `.git` entry (directory or
/// worktree file) or a `package.json` file; the nearest match is the project
/// root. Falls back to `start_dir` when nothing qualifies.
pub fn find_project_root(start_dir: &Path) -> Result<PathBuf, ScopeError> {
    if !start_dir.is_dir() {
        return Err(ScopeError::NotADirectory(start_dir.to_path_buf()));
    }
    let mut current = Some(start_dir);
    while let Some(dir) = current {
        let git = dir.join(".git");
        if git.exists() || dir.join("package.json").is_file() {
            return Ok(dir.to_path_buf());
        }
        current = dir.parent();
    }
    Ok(start_dir.to_path_buf())
}

/// Materialize the paths for one scope level. No directories are created.
pub fn resolve_scope(level: ScopeLevel, ctx: &ScopeContext) -> Result<ScopeConfig, ScopeError> {
    let root = match level {
        ScopeLevel::Global => ctx.skilldex_home.join("global"),
        ScopeLevel::Shared => ctx.skilldex_home.join("shared"),
        ScopeLevel::Project => find_project_root(&ctx.start_dir)?.join(".skilldex"),
    };
    Ok(ScopeConfig::at(level, root))
}

/// Materialize all three scopes in precedence order: project, shared, global.
pub fn resolve_all_scopes(ctx: &ScopeContext) -> Result<[ScopeConfig; 3], ScopeError> {
    Ok([
        resolve_scope(ScopeLevel::Project, ctx)?,
        resolve_scope(ScopeLevel::Shared, ctx)?,
        resolve_scope(ScopeLevel::Global, ctx)?,
    ])
}

/// Resolve a skill name to its winning installation under local-first
/// precedence. Missing manifests count as empty scopes.
pub fn resolve_skill(
    name: &str,
    ctx: &ScopeContext,
) -> Result<Option<(ScopeLevel, InstalledSkill)>, ScopeError> {
    for config in resolve_all_scopes(ctx)? {
        let loaded = manifest::load_manifest(&config.manifest_path, config.level)?;
        if let Some(entry) = loaded.manifest.skills.get(name) {
            return Ok(Some((config.level, entry.clone())));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use tempfile::TempDir;

    #[test]
    fn project_root_found_via_git_dir() {
        let tmp = TempDir::new().unwrap();
        let app = tmp.path().join("w/app");
        fs::create_dir_all(app.join("src")).unwrap();
        fs::create_dir_all(app.join(".git")).unwrap();
        assert_eq!(find_project_root(&app.join("src")).unwrap(), app);
    }

    #[test]
    fn project_root_falls_back_to_start() {
        let tmp = TempDir::new().unwrap();
        let start = tmp.path().join("plain");
        fs::create_dir_all(&start).unwrap();
        assert_eq!(find_project_root(&start).unwrap(), start);
    }

    #[test]
    fn nearest_ancestor_wins() {
        let tmp = TempDir::new().unwrap();
        let outer = tmp.path().join("outer");
        let inner = outer.join("inner");
        fs::create_dir_all(outer.join(".git")).unwrap();
        fs::create_dir_all(&inner).unwrap();
        fs::write(inner.join("package.json"), "{}").unwrap();
        assert_eq!(find_project_root(&inner).unwrap(), inner);
    }

    #[test]
    fn git_file_counts_as_project_marker() {
        let tmp = TempDir::new().unwrap();
        let worktree = tmp.path().join("wt");
        fs::create_dir_all(&worktree).unwrap();
        fs::write(worktree.join(".git"), "gitdir: /elsewhere\n").unwrap();
        assert_eq!(find_project_root(&worktree).unwrap(), worktree);
    }

    #[test]
    fn scope_paths_follow_home() {
        let tmp = TempDir::new().unwrap();
        fs::create_dir_all(tmp.path().join("proj/.git")).unwrap();
        let ctx = ScopeContext::new("/h/.skilldex", tmp.path().join("proj"));
        let global = resolve_scope(ScopeLevel::Global, &ctx).unwrap();
        assert_eq!(global.root_path, PathBuf::from("/h/.skilldex/global"));
        assert_eq!(global.manifest_path, PathBuf::from("/h/.skilldex/global/skilldex.json"));
        assert_eq!(global.skills_dir, PathBuf::from("/h/.skilldex/global/skills"));
        assert_eq!(global.skillsets_dir, PathBuf::from("/h/.skilldex/global/skillsets"));

        let shared = resolve_scope(ScopeLevel::Shared, &ctx).unwrap();
        assert_eq!(shared.root_path, PathBuf::from("/h/.skilldex/shared"));

        let project = resolve_scope(ScopeLevel::Project, &ctx).unwrap();
        assert_eq!(project.root_path, tmp.path().join("proj/.skilldex"));
    }

    #[test]
    fn all_scopes_in_precedence_order() {
        let tmp = TempDir::new().unwrap();
        let ctx = ScopeContext::new(tmp.path().join("home"), tmp.path());
        let scopes = resolve_all_scopes(&ctx).unwrap();
        let levels: Vec<ScopeLevel> = scopes.iter().map(|s| s.level).collect();
        assert_eq!(levels, vec![ScopeLevel::Project, ScopeLevel::Shared, ScopeLevel::Global]);
        // Deterministic across calls.
        let again = resolve_all_scopes(&ctx).unwrap();
        assert_eq!(scopes[0].root_path, again[0].root_path);
    }

    #[test]
    fn same_project_root_gives_same_project_scope() {
        let tmp = TempDir::new().unwrap();
        let app = tmp.path().join("app");
        fs::create_dir_all(app.join("src/deep")).unwrap();
        fs::create_dir_all(app.join(".git")).unwrap();
        let ctx1 = ScopeContext::new("/h", app.join("src"));
        let ctx2 = ScopeContext::new("/h", app.join("src/deep"));
        assert_eq!(
            resolve_scope(ScopeLevel::Project, &ctx1).unwrap().root_path,
            resolve_scope(ScopeLevel::Project, &ctx2).unwrap().root_path,
        );
    }

    #[test]
    fn scope_level_ordering_is_precedence() {
        assert!(ScopeLevel::Project < ScopeLevel::Shared);
        assert!(ScopeLevel::Shared < ScopeLevel::Global);
    }

    #[test]
    fn parse_accepts_shorthand() {
        assert_eq!(ScopeLevel::parse("g"), Some(ScopeLevel::Global));
        assert_eq!(ScopeLevel::parse("shared"), Some(ScopeLevel::Shared));
        assert_eq!(ScopeLevel::parse("x"), None);
    }
}
