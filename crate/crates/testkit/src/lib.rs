//! Shared fixtures and helpers for skilldex tests: skill/skillset directory
//! builders, local git repositories, and directory-tree digests.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};

/// A 31-word description (the skillset reference fixture's).
pub const DESC_31_WORDS: &str = "Skills for everyday developer workflows. Covers commit message \
     writing using the Conventional Commits spec, PR description generation, changelog \
     production from git history, and test writing that matches a project's existing patterns.";

/// The canonical example skill's description: 23 words, below the 30-word
/// recommendation, so fixtures using it score 90.
pub const DESC_23_WORDS: &str = "Guides Claude through systematic memory dump analysis using \
     Volatility3 and similar tools. Covers process enumeration, network connections, and \
     artifact extraction for incident response.";

/// A 12-word description for short-description fixtures.
pub const DESC_12_WORDS: &str =
    "Helps with memory dump analysis using Volatility3 and other common forensic tools.";

/// A generic 32-word description for fixtures that should pass every check.
pub const DESC_OK: &str = "Guides the agent through a focused workflow with concrete steps, \
     expected inputs, produced outputs, and the exact conditions under which it should trigger, \
     so that invocation is reliable and repeatable.";

/// Declarative skill directory builder.
#[derive(Debug, Clone)]
pub struct SkillSpec {
    pub name: String,
    pub version: String,
    pub description: String,
    pub tags: Vec<String>,
    pub author: Option<String>,
    pub spec_version: Option<String>,
    pub body: String,
    /// Extra files as (relative path, contents).
    pub files: Vec<(String, String)>,
}

impl SkillSpec {
    /// A skill that passes all eight checks.
    pub fn valid(name: &str) -> SkillSpec {
        SkillSpec {
            name: name.to_string(),
            version: "1.0.0".to_string(),
            description: DESC_OK.to_string(),
            tags: vec!["fixture".to_string()],
            author: None,
            spec_version: Some("1.0".to_string()),
            body: "## Instructions\n\nFollow the workflow.\n".to_string(),
            files: Vec::new(),
        }
    }

    pub fn description(mut self, description: &str) -> SkillSpec {
        self.description = description.to_string();
        self
    }

    pub fn tags(mut self, tags: &[&str]) -> SkillSpec {
        self.tags = tags.iter().map(|t| t.to_string()).collect();
        self
    }

    pub fn body(mut self, body: &str) -> SkillSpec {
        self.body = body.to_string();
        self
    }

    pub fn file(mut self, rel: &str, contents: &str) -> SkillSpec {
        self.files.push((rel.to_string(), contents.to_string()));
        self
    }

    pub fn skill_md(&self) -> String {
        let mut fm = String::from("---\n");
        fm.push_str(&format!("name: {}\n", self.name));
        fm.push_str(&format!("description: \"{}\"\n", self.description));
        fm.push_str(&format!("version: \"{}\"\n", self.version));
        if !self.tags.is_empty() {
            fm.push_str(&format!("tags: [{}]\n", self.tags.join(", ")));
        }
        if let Some(author) = &self.author {
            fm.push_str(&format!("author: \"{}\"\n", author));
        }
        if let Some(spec) = &self.spec_version {
            fm.push_str(&format!("spec_version: \"{}\"\n", spec));
        }
        fm.push_str("---\n");
        fm.push_str(&self.body);
        fm
    }

    /// Write the skill into `dir` (created if needed); returns `dir`.
    pub fn write_to(&self, dir: &Path) -> PathBuf {
        fs::create_dir_all(dir).unwrap();
        fs::write(dir.join("SKILL.md"), self.skill_md()).unwrap();
        for (rel, contents) in &self.files {
            let path = dir.join(rel);
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(path, contents).unwrap();
        }
        dir.to_path_buf()
    }
}

/// Write the forensics example skill (tags include `volatility`; its 23-word
/// description keeps it at score 90). Returns the skill directory.
pub fn forensics_skill(parent: &Path) -> PathBuf {
    SkillSpec {
        name: "forensics-memory-analysis".to_string(),
        version: "1.0.0".to_string(),
        description: DESC_23_WORDS.to_string(),
        tags: ["forensics", "memory", "volatility", "incident-response"]
            .iter()
            .map(|t| t.to_string())
            .collect(),
        author: Some("skilly".to_string()),
        spec_version: Some("1.0".to_string()),
        body: "## Instructions\n\nEnumerate processes, inspect network connections, extract \
               artifacts.\n"
            .to_string(),
        files: Vec::new(),
    }
    .write_to(&parent.join("forensics-memory-analysis"))
}

/// Build the reference `developer` skillset fixture: four embedded skills
/// around a shared `assets/commit-conventions.md`. Returns the skillset
/// directory.
pub fn developer_skillset(parent: &Path) -> PathBuf {
    let root = parent.join("developer");
    fs::create_dir_all(root.join("assets")).unwrap();
    fs::write(
        root.join("SKILLSET.md"),
        format!(
            "---\nname: developer\ndescription: \"{}\"\nversion: \"1.0.0\"\ntags: [developer, \
             git, testing, workflow, productivity]\nauthor: \"skilldex-examples\"\nspec_version: \
             \"1.0\"\n---\n\n## Overview\n\nFour developer workflow skills bound to one shared \
             commit vocabulary.\n",
            DESC_31_WORDS
        ),
    )
    .unwrap();
    fs::write(
        root.join("assets/commit-conventions.md"),
        "# Commit conventions\n\n| type | changelog section |\n|------|-------------------|\n\
         | feat | Added |\n| fix | Fixed |\n| docs | Documentation |\n",
    )
    .unwrap();

    SkillSpec {
        name: "conventional-commit".into(),
        version: "1.0.0".into(),
        description: "Writes commit messages that follow the Conventional Commits specification, \
                      using the shared commit type definitions so that commit subjects, types, \
                      and scopes stay consistent with the changelog generation skill in this \
                      skillset."
            .into(),
        tags: vec!["git".into(), "commits".into()],
        author: None,
        spec_version: Some("1.0".into()),
        body: "## Instructions\n\nUse the type table in \
               [commit conventions](../assets/commit-conventions.md) when writing subjects.\n"
            .into(),
        files: Vec::new(),
    }
    .write_to(&root.join("conventional-commit"));

    SkillSpec {
        name: "changelog-gen".into(),
        version: "1.0.0".into(),
        description: "Generates changelog entries from git history by classifying commits into \
                      sections using the shared commit type mapping, so every commit written by \
                      the companion commit skill lands in the right changelog section."
            .into(),
        tags: vec!["git".into(), "changelog".into()],
        author: None,
        spec_version: Some("1.0".into()),
        body: "## Instructions\n\nParse history with [the log parser](scripts/parse-git-log.sh), \
               map types via [commit conventions](../assets/commit-conventions.md), and fill \
               [the template](assets/changelog-template.md).\n"
            .into(),
        files: vec![
            (
                "scripts/parse-git-log.sh".into(),
                "#!/bin/sh\ngit log --oneline \"$@\"\n".into(),
            ),
            (
                "assets/changelog-template.md".into(),
                "# Changelog\n\n## Unreleased\n".into(),
            ),
        ],
    }
    .write_to(&root.join("changelog-gen"));

    SkillSpec {
        name: "pr-description".into(),
        version: "1.0.0".into(),
        description: "Drafts pull request descriptions from branch diffs and commit history, \
                      filling the bundled template with a summary, motivation, test notes, and \
                      reviewer guidance so that every pull request reads consistently."
            .into(),
        tags: vec!["git".into(), "review".into()],
        author: None,
        spec_version: Some("1.0".into()),
        body: "## Instructions\n\nFill [the PR template](assets/pr-template.md) from the diff.\n"
            .into(),
        files: vec![(
            "assets/pr-template.md".into(),
            "## Summary\n\n## Motivation\n\n## Testing\n".into(),
        )],
    }
    .write_to(&root.join("pr-description"));

    SkillSpec {
        name: "test-writer".into(),
        version: "1.0.0".into(),
        description: "Writes unit tests that match a project's existing testing patterns by \
                      detecting the test framework in use and following the reference patterns \
                      document, keeping new tests consistent with the surrounding suite."
            .into(),
        tags: vec!["testing".into()],
        author: None,
        spec_version: Some("1.0".into()),
        body: "## Instructions\n\nDetect the framework with \
               [the detector](scripts/detect-framework.sh), then follow \
               [testing patterns](references/testing-patterns.md).\n"
            .into(),
        files: vec![
            (
                "scripts/detect-framework.sh".into(),
                "#!/bin/sh\nls package.json Cargo.toml 2>/dev/null\n".into(),
            ),
            (
                "references/testing-patterns.md".into(),
                "# Testing patterns\n\nArrange, act, assert.\n".into(),
            ),
        ],
    }
    .write_to(&root.join("test-writer"));

    root
}

fn run_git(dir: &Path, args: &[&str]) {
    let output = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["-c", "user.name=fixtures", "-c", "user.email=fixtures@example.com"])
        .args(args)
        .output()
        .expect("git runs");
    assert!(
        output.status.success(),
        "git {:?} failed: {}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Turn `dir` into a git repository with one commit on branch `main`.
pub fn init_git_repo(dir: &Path) {
    let output = Command::new("git")
        .args(["init", "-q", "-b", "main"])
        .arg(dir)
        .output()
        .expect("git runs");
    assert!(
        output.status.success(),
        "git init failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    run_git(dir, &["add", "-A"]);
    run_git(dir, &["commit", "-q", "-m", "fixture"]);
}

/// Commit all pending changes in a fixture repository.
pub fn commit_all(dir: &Path, message: &str) {
    run_git(dir, &["add", "-A"]);
    run_git(dir, &["commit", "-q", "-m", message]);
}

/// A `file://` URL for a local fixture repository.
pub fn file_url(dir: &Path) -> String {
    format!("file://{}", dir.display())
}

/// SHA-256 digest over every file path and its contents under `root`,
/// in sorted order. Two directory trees with equal digests are byte-equal.
pub fn tree_digest(root: &Path) -> String {
    let mut entries: Vec<(String, Vec<u8>)> = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.unwrap();
        if entry.file_type().is_file() {
            let rel = entry
                .path()
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            entries.push((rel, fs::read(entry.path()).unwrap()));
        }
    }
    entries.sort();
    let mut hasher = Sha256::new();
    for (rel, bytes) in &entries {
        hasher.update(rel.as_bytes());
        hasher.update([0u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

/// Panic unless two directory trees hold byte-identical files.
pub fn assert_trees_equal(a: &Path, b: &Path) {
    assert_eq!(
        tree_digest(a),
        tree_digest(b),
        "directory trees differ: {} vs {}",
        a.display(),
        b.display()
    );
}
