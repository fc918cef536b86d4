//! Server-side source fetching for publish, patch, and seeding.
//!
//! A source URL is either cloned (git) or, in test mode, read straight from
//! the local filesystem so the whole service can run hermetically.

use std::path::{Path, PathBuf};

use thiserror::Error;

use skilldex_core::install;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("failed to fetch {url:?}: {detail}")]
    Fetch { url: String, detail: String },
    #[error("subpath {0:?} does not exist at the fetched source")]
    SubpathMissing(String),
}

/// A fetched source tree. Holds the temporary checkout alive while in use.
pub struct FetchedSource {
    _temp: Option<tempfile::TempDir>,
    pub root: PathBuf,
    /// The checked-out branch, when the source was cloned.
    pub branch: Option<String>,
    /// Repository clone URL, when the source was cloned.
    pub repo_url: Option<String>,
}

/// Materialize a source URL into a local directory. `test_mode` permits
/// plain filesystem paths.
pub fn fetch_source(
    source_url: &str,
    subpath: Option<&str>,
    test_mode: bool,
) -> Result<FetchedSource, FetchError> {
    let as_path = Path::new(source_url);
    if test_mode && as_path.is_dir() {
        let root = apply_subpath(as_path, subpath)?;
        return Ok(FetchedSource {
            _temp: None,
            root,
            branch: None,
            repo_url: None,
        });
    }

    let (repo_url, branch, url_subpath) = if source_url.starts_with("git+") {
        let git_ref = install::parse_git_url(source_url).map_err(|e| FetchError::Fetch {
            url: source_url.to_string(),
            detail: e.to_string(),
        })?;
        (git_ref.repo_url, git_ref.branch, git_ref.subpath)
    } else {
        (source_url.to_string(), None, None)
    };

    let temp = tempfile::tempdir().map_err(|e| FetchError::Fetch {
        url: source_url.to_string(),
        detail: e.to_string(),
    })?;
    let checkout = temp.path().join("src");
    install::clone_shallow(&repo_url, branch.as_deref(), &checkout).map_err(|e| {
        FetchError::Fetch {
            url: source_url.to_string(),
            detail: e.to_string(),
        }
    })?;

    let mut root = checkout.clone();
    if let Some(sub) = url_subpath.as_deref() {
        root = apply_subpath(&root, Some(sub))?;
    }
    let root = apply_subpath(&root, subpath)?;
    let branch = branch.or_else(|| detect_branch(&checkout));

    Ok(FetchedSource {
        _temp: Some(temp),
        root,
        branch,
        repo_url: Some(repo_url),
    })
}

fn apply_subpath(root: &Path, subpath: Option<&str>) -> Result<PathBuf, FetchError> {
    match subpath {
        None => Ok(root.to_path_buf()),
        Some(sub) => {
            let resolved = root.join(sub);
            if resolved.is_dir() {
                Ok(resolved)
            } else {
                Err(FetchError::SubpathMissing(sub.to_string()))
            }
        }
    }
}

fn detect_branch(checkout: &Path) -> Option<String> {
    let output = std::process::Command::new("git")
        .arg("-C")
        .arg(checkout)
        .args(["rev-parse", "--abbrev-ref", "HEAD"])
        .output()
        .ok()?;
    if !output.status.success() {
        return None;
    }
    let branch = String::from_utf8_lossy(&output.stdout).trim().to_string();
    (!branch.is_empty() && branch != "HEAD").then_some(branch)
}

/// Find the skillset directory under a fetched root: the root itself or a
/// non-hidden child up to two levels down.
pub fn find_skillset_dir(root: &Path) -> Option<PathBuf> {
    if root.join("SKILLSET.md").is_file() {
        return Some(root.to_path_buf());
    }
    let mut found = Vec::new();
    let mut queue = vec![(root.to_path_buf(), 1usize)];
    while let Some((dir, depth)) = queue.pop() {
        for child in skilldex_core::fsutil::child_dirs(&dir).unwrap_or_default() {
            if skilldex_core::fsutil::is_hidden(&child) {
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
