//! Format conformance scoring for skills and skillsets.
//!
//! A skill directory is scored against eight checks, a skillset directory
//! against seven; each check contributes a fixed point value and the score
//! is the sum over passing checks (0–100). Diagnostics are compiler-style:
//! a severity, an optional 1-based line number, and a message. A missing or
//! unparseable frontmatter block is the only fatal condition: it scores 0,
//! emits exactly one error diagnostic, and no further checks run.
//!
//! Scores inform; they never gatekeep. Failed checks other than the unknown
//! subdirectory check surface as errors, but only the skillset install path
//! treats errors as blocking.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{
    self, FrontmatterValue, ParseFailureKind, RelativeLink, SkillDocument,
};
use crate::skillset;

/// Spec version the built-in rubric validates against.
pub const BUILTIN_SPEC_VERSION: &str = "1.0";

/// Extensions that mark a referenced file as an executable helper.
pub const SCRIPT_EXTENSIONS: [&str; 6] = ["sh", "py", "js", "ts", "rb", "ps1"];

/// Subdirectories a skill directory may contain.
pub const ALLOWED_SKILL_SUBDIRS: [&str; 3] = ["scripts", "references", "assets"];

const MAX_SKILL_LINES: usize = 500;
const MIN_DESCRIPTION_WORDS: usize = 30;

/// Severity of a diagnostic, compiler-style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Pass,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Pass => "pass",
        };
        f.write_str(s)
    }
}

/// Stable identifier of a conformance check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckId {
    Frontmatter,
    Name,
    DescPresent,
    DescLength,
    LineBudget,
    Subdirs,
    ResourcesExist,
    ResourcesPlaced,
    MinSkills,
    ToplevelDirs,
    RemoteUrls,
}

impl CheckId {
    /// Point value of the check in its rubric.
    pub fn points(self) -> u32 {
        match self {
            CheckId::Frontmatter => 25,
            CheckId::Name => 10,
            CheckId::DescPresent => 10,
            CheckId::DescLength => 10,
            CheckId::LineBudget => 15,
            CheckId::Subdirs => 10,
            CheckId::ResourcesExist => 15,
            CheckId::ResourcesPlaced => 5,
            CheckId::MinSkills => 20,
            CheckId::ToplevelDirs => 10,
            CheckId::RemoteUrls => 15,
        }
    }
}

/// Checks run for a skill directory, in rubric order.
pub const SKILL_CHECKS: [CheckId; 8] = [
    CheckId::Frontmatter,
    CheckId::Name,
    CheckId::DescPresent,
    CheckId::DescLength,
    CheckId::LineBudget,
    CheckId::Subdirs,
    CheckId::ResourcesExist,
    CheckId::ResourcesPlaced,
];

/// Checks run for a skillset directory, in rubric order.
pub const SKILLSET_CHECKS: [CheckId; 7] = [
    CheckId::Frontmatter,
    CheckId::Name,
    CheckId::DescPresent,
    CheckId::DescLength,
    CheckId::MinSkills,
    CheckId::ToplevelDirs,
    CheckId::RemoteUrls,
];

/// One line-anchored finding from the validator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub message: String,
    #[serde(rename = "checkId")]
    pub check_id: CheckId,
}

impl Diagnostic {
    fn pass(check_id: CheckId, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Pass, line: None, message: message.into(), check_id }
    }

    fn fail(check_id: CheckId, line: Option<usize>, message: impl Into<String>) -> Self {
        let severity = if check_id == CheckId::Subdirs {
            Severity::Warning
        } else {
            Severity::Error
        };
        Diagnostic { severity, line, message: message.into(), check_id }
    }
}

/// The outcome of validating one skill or skillset directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationResult {
    /// Skill/skillset name, or the directory name when no name is available.
    pub subject: String,
    /// Sum of the point values of passing checks, 0–100.
    pub score: u32,
    pub diagnostics: Vec<Diagnostic>,
    pub spec_version: String,
    pub pass_count: usize,
    pub warn_count: usize,
    pub error_count: usize,
}

impl ValidationResult {
    fn from_diagnostics(subject: String, spec_version: String, diagnostics: Vec<Diagnostic>) -> Self {
        let score = diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Pass)
            .map(|d| d.check_id.points())
            .sum();
        let pass_count = diagnostics.iter().filter(|d| d.severity == Severity::Pass).count();
        let warn_count = diagnostics.iter().filter(|d| d.severity == Severity::Warning).count();
        let error_count = diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
        ValidationResult {
            subject,
            score,
            diagnostics,
            spec_version,
            pass_count,
            warn_count,
            error_count,
        }
    }

    /// The messages of all non-pass diagnostics, in order.
    pub fn problem_messages(&self) -> Vec<String> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity != Severity::Pass)
            .map(|d| match d.line {
                Some(line) => format!("line {}: {}", line, d.message),
                None => d.message.clone(),
            })
            .collect()
    }
}

/// Errors that prevent validation from producing a scored result.
#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("not a directory: {0}")]
    NotADirectory(PathBuf),
    #[error("no SKILL.md in {0}")]
    NoSkillFile(PathBuf),
    #[error("no SKILLSET.md in {0}")]
    NoSkillsetFile(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ValidateError {
    /// Stable error code for structured output.
    pub fn code(&self) -> &'static str {
        match self {
            ValidateError::NotADirectory(_) => "E_NOT_A_DIRECTORY",
            ValidateError::NoSkillFile(_) => "E_NO_SKILL_FILE",
            ValidateError::NoSkillsetFile(_) => "E_NO_SKILLSET_FILE",
            ValidateError::Io { .. } => "E_IO",
        }
    }
}

/// Score a skill directory against the eight-check rubric.
pub fn validate_skill(skill_dir: &Path) -> Result<ValidationResult, ValidateError> {
    if !skill_dir.is_dir() {
        return Err(ValidateError::NotADirectory(skill_dir.to_path_buf()));
    }
    let skill_file = skill_dir.join("SKILL.md");
    if !skill_file.is_file() {
        return Err(ValidateError::NoSkillFile(skill_dir.to_path_buf()));
    }
    let text = std::fs::read_to_string(&skill_file).map_err(|source| ValidateError::Io {
        path: skill_file.clone(),
        source,
    })?;

    let doc = match document::parse_skill_document(&text) {
        Ok(doc) => doc,
        Err(failure) => return Ok(fatal_result(skill_dir, &failure)),
    };

    let mut diagnostics = Vec::with_capacity(SKILL_CHECKS.len());
    diagnostics.push(Diagnostic::pass(CheckId::Frontmatter, "YAML frontmatter valid"));
    diagnostics.push(check_name(&doc));
    diagnostics.push(check_description_present(&doc));
    diagnostics.push(check_description_length(&doc));
    diagnostics.push(check_line_budget(&doc));
    diagnostics.push(check_subdirs(skill_dir));

    let links = document::extract_relative_links(&doc.body);
    let (exist, placed) = check_resources(skill_dir, &links, doc.body_start_line);
    diagnostics.push(exist);
    diagnostics.push(placed);

    Ok(ValidationResult::from_diagnostics(
        subject_of(&doc, skill_dir),
        spec_version_of(&doc),
        diagnostics,
    ))
}

/// Score a skillset directory against the seven-check rubric.
pub fn validate_skillset(skillset_dir: &Path) -> Result<ValidationResult, ValidateError> {
    if !skillset_dir.is_dir() {
        return Err(ValidateError::NotADirectory(skillset_dir.to_path_buf()));
    }
    let skillset_file = skillset_dir.join("SKILLSET.md");
    if !skillset_file.is_file() {
        return Err(ValidateError::NoSkillsetFile(skillset_dir.to_path_buf()));
    }
    let text = std::fs::read_to_string(&skillset_file).map_err(|source| ValidateError::Io {
        path: skillset_file.clone(),
        source,
    })?;

    let doc = match document::parse_skill_document(&text) {
        Ok(doc) => doc,
        Err(failure) => return Ok(fatal_result(skillset_dir, &failure)),
    };

    let embedded = skillset::discover_embedded_skills(skillset_dir);

    let mut diagnostics = Vec::with_capacity(SKILLSET_CHECKS.len());
    diagnostics.push(Diagnostic::pass(CheckId::Frontmatter, "YAML frontmatter valid"));
    diagnostics.push(check_name(&doc));
    diagnostics.push(check_description_present(&doc));
    diagnostics.push(check_description_length(&doc));
    diagnostics.push(check_min_skills(&doc, embedded.len()));
    diagnostics.push(check_toplevel_dirs(skillset_dir));
    diagnostics.push(check_remote_urls(&doc));

    Ok(ValidationResult::from_diagnostics(
        subject_of(&doc, skillset_dir),
        spec_version_of(&doc),
        diagnostics,
    ))
}

fn fatal_result(dir: &Path, failure: &document::ParseFailure) -> ValidationResult {
    let message = match failure.kind {
        ParseFailureKind::MissingFrontmatter => failure.message.clone(),
        ParseFailureKind::MalformedYaml => {
            format!("malformed YAML frontmatter: {}", failure.message)
        }
    };
    let diagnostics = vec![Diagnostic {
        severity: Severity::Error,
        line: failure.line,
        message,
        check_id: CheckId::Frontmatter,
    }];
    ValidationResult::from_diagnostics(
        dir_name(dir),
        BUILTIN_SPEC_VERSION.to_string(),
        diagnostics,
    )
}

fn dir_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn subject_of(doc: &SkillDocument, dir: &Path) -> String {
    match doc.scalar("name").map(str::trim) {
        Some(name) if !name.is_empty() => name.to_string(),
        _ => dir_name(dir),
    }
}

fn spec_version_of(doc: &SkillDocument) -> String {
    match doc.scalar("spec_version").map(str::trim) {
        Some(v) if !v.is_empty() => v.to_string(),
        _ => BUILTIN_SPEC_VERSION.to_string(),
    }
}

fn check_name(doc: &SkillDocument) -> Diagnostic {
    match doc.scalar("name").map(str::trim) {
        Some(name) if !name.is_empty() => Diagnostic::pass(CheckId::Name, "name field present"),
        Some(_) => Diagnostic::fail(
            CheckId::Name,
            doc.field_line("name"),
            "name field is empty",
        ),
        None => Diagnostic::fail(CheckId::Name, None, "missing required name field"),
    }
}

fn check_description_present(doc: &SkillDocument) -> Diagnostic {
    match doc.scalar("description").map(str::trim) {
        Some(desc) if !desc.is_empty() => {
            Diagnostic::pass(CheckId::DescPresent, "description field present")
        }
        Some(_) => Diagnostic::fail(
            CheckId::DescPresent,
            doc.field_line("description"),
            "description field is empty",
        ),
        None => Diagnostic::fail(CheckId::DescPresent, None, "missing required description field"),
    }
}

fn check_description_length(doc: &SkillDocument) -> Diagnostic {
    let words = document::count_words(doc.scalar("description").unwrap_or(""));
    if words >= MIN_DESCRIPTION_WORDS {
        Diagnostic::pass(
            CheckId::DescLength,
            format!("description length OK ({} words)", words),
        )
    } else {
        Diagnostic::fail(
            CheckId::DescLength,
            doc.field_line("description"),
            format!(
                "description too short ({} words, recommended: {}+)",
                words, MIN_DESCRIPTION_WORDS
            ),
        )
    }
}

fn check_line_budget(doc: &SkillDocument) -> Diagnostic {
    if doc.total_lines <= MAX_SKILL_LINES {
        Diagnostic::pass(
            CheckId::LineBudget,
            format!("SKILL.md line count OK ({} lines)", doc.total_lines),
        )
    } else {
        Diagnostic::fail(
            CheckId::LineBudget,
            None,
            format!(
                "SKILL.md too long ({} lines, max {})",
                doc.total_lines, MAX_SKILL_LINES
            ),
        )
    }
}

/// Names of the non-hidden direct child directories of `dir`, sorted.
fn visible_child_dir_names(dir: &Path) -> Vec<String> {
    crate::fsutil::child_dirs(dir)
        .unwrap_or_default()
        .into_iter()
        .filter(|p| !crate::fsutil::is_hidden(p))
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect()
}

fn check_subdirs(skill_dir: &Path) -> Diagnostic {
    let unknown: Vec<String> = visible_child_dir_names(skill_dir)
        .into_iter()
        .filter(|name| !ALLOWED_SKILL_SUBDIRS.contains(&name.as_str()))
        .collect();
    if unknown.is_empty() {
        Diagnostic::pass(CheckId::Subdirs, "All subdirectories allowed")
    } else {
        let label = if unknown.len() == 1 { "subdirectory" } else { "subdirectories" };
        let quoted: Vec<String> = unknown.iter().map(|n| format!("{:?}", n)).collect();
        Diagnostic::fail(
            CheckId::Subdirs,
            None,
            format!(
                "Unknown {} {} -- only scripts/, references/, assets/ allowed",
                label,
                quoted.join(", ")
            ),
        )
    }
}

/// Lexically normalize a relative link target, dropping `.` components.
/// Returns the components, or `None` if the path escapes upward.
fn normalized_components(target: &str) -> Option<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for comp in Path::new(target).components() {
        match comp {
            Component::CurDir => {}
            Component::ParentDir => {
                if out.pop().is_none() {
                    return None;
                }
            }
            Component::Normal(c) => out.push(c.to_string_lossy().into_owned()),
            Component::RootDir | Component::Prefix(_) => return None,
        }
    }
    Some(out)
}

/// Strip a `#fragment` suffix from a link target before resolving it.
fn strip_fragment(target: &str) -> &str {
    match target.split_once('#') {
        Some((path, _)) => path,
        None => target,
    }
}

fn check_resources(
    skill_dir: &Path,
    links: &[RelativeLink],
    body_start_line: usize,
) -> (Diagnostic, Diagnostic) {
    let file_line = |body_line: usize| Some(body_start_line - 1 + body_line);

    let mut missing: Vec<(&RelativeLink, &str)> = Vec::new();
    let mut existing: Vec<(&RelativeLink, &str)> = Vec::new();
    for link in links {
        let path_part = strip_fragment(&link.target);
        if path_part.is_empty() {
            continue;
        }
        if skill_dir.join(path_part).exists() {
            existing.push((link, path_part));
        } else {
            missing.push((link, path_part));
        }
    }

    let exist = if missing.is_empty() {
        Diagnostic::pass(CheckId::ResourcesExist, "All referenced resources exist")
    } else {
        let (first, target) = &missing[0];
        let mut message = format!("referenced resource {:?} not found", target);
        if missing.len() > 1 {
            message.push_str(&format!(" (and {} more)", missing.len() - 1));
        }
        Diagnostic::fail(CheckId::ResourcesExist, file_line(first.line), message)
    };

    // Placement applies only to resources that exist; broken links are
    // already the existence check's failure.
    let mut misplaced: Vec<(&RelativeLink, String)> = Vec::new();
    for (link, path_part) in &existing {
        let Some(components) = normalized_components(path_part) else {
            // Escapes the skill root: cannot be in the right subdirectory.
            let required = required_subdir(path_part);
            if let Some(required) = required {
                misplaced.push((link, required.to_string()));
            }
            continue;
        };
        let Some(required) = required_subdir(path_part) else {
            continue;
        };
        if components.first().map(String::as_str) != Some(required) {
            misplaced.push((link, required.to_string()));
        }
    }

    let placed = if misplaced.is_empty() {
        Diagnostic::pass(
            CheckId::ResourcesPlaced,
            "All resources in correct subdirectories",
        )
    } else {
        let (first, required) = &misplaced[0];
        let mut message = format!(
            "resource {:?} should live under {}/",
            strip_fragment(&first.target),
            required
        );
        if misplaced.len() > 1 {
            message.push_str(&format!(" (and {} more)", misplaced.len() - 1));
        }
        Diagnostic::fail(CheckId::ResourcesPlaced, file_line(first.line), message)
    };

    (exist, placed)
}

/// The subdirectory a referenced file must live in, by extension, or `None`
/// when the extension is unconstrained.
fn required_subdir(target: &str) -> Option<&'static str> {
    let path = Path::new(target);
    let ext = path.extension()?.to_string_lossy().to_lowercase();
    if SCRIPT_EXTENSIONS.contains(&ext.as_str()) {
        return Some("scripts");
    }
    if ext == "md" && path.file_name().map(|n| n != "SKILL.md").unwrap_or(true) {
        return Some("references");
    }
    None
}

fn check_min_skills(doc: &SkillDocument, embedded_count: usize) -> Diagnostic {
    let listed = match doc.frontmatter.get("skills") {
        Some(FrontmatterValue::EntryList(entries)) => entries.len(),
        Some(FrontmatterValue::List(items)) => items.len(),
        _ => 0,
    };
    let total = embedded_count + listed;
    if total >= 1 {
        Diagnostic::pass(CheckId::MinSkills, format!("{} skill(s) present", total))
    } else {
        Diagnostic::fail(
            CheckId::MinSkills,
            None,
            "skillset contains no skills (expected at least 1 embedded or listed skill)",
        )
    }
}

fn check_toplevel_dirs(skillset_dir: &Path) -> Diagnostic {
    let unknown: Vec<String> = visible_child_dir_names(skillset_dir)
        .into_iter()
        .filter(|name| name != "assets" && !skillset_dir.join(name).join("SKILL.md").is_file())
        .collect();
    if unknown.is_empty() {
        Diagnostic::pass(CheckId::ToplevelDirs, "All top-level directories allowed")
    } else {
        let label = if unknown.len() == 1 { "directory" } else { "directories" };
        let quoted: Vec<String> = unknown.iter().map(|n| format!("{:?}", n)).collect();
        Diagnostic::fail(
            CheckId::ToplevelDirs,
            None,
            format!(
                "Unknown top-level {} {} -- only assets/ and skill directories allowed",
                label,
                quoted.join(", ")
            ),
        )
    }
}

/// Whether a `skills[].source_url` value is an accepted remote skill URL:
/// https with host `github.com`, optionally prefixed `git+`.
pub fn is_valid_remote_skill_url(url: &str) -> bool {
    let stripped = url.strip_prefix("git+").unwrap_or(url);
    match url::Url::parse(stripped) {
        Ok(parsed) => parsed.scheme() == "https" && parsed.host_str() == Some("github.com"),
        Err(_) => false,
    }
}

fn check_remote_urls(doc: &SkillDocument) -> Diagnostic {
    let entries = match doc.frontmatter.get("skills") {
        None => {
            return Diagnostic::pass(CheckId::RemoteUrls, "All remote skill URLs OK");
        }
        Some(FrontmatterValue::EntryList(entries)) if entries.is_empty() => {
            return Diagnostic::pass(CheckId::RemoteUrls, "All remote skill URLs OK");
        }
        Some(FrontmatterValue::List(items)) if items.is_empty() => {
            return Diagnostic::pass(CheckId::RemoteUrls, "All remote skill URLs OK");
        }
        Some(FrontmatterValue::EntryList(entries)) => entries,
        Some(_) => {
            return Diagnostic::fail(
                CheckId::RemoteUrls,
                doc.field_line("skills"),
                "skills must be a list of {name, source_url} entries",
            );
        }
    };

    let expected_keys: BTreeSet<&str> = ["name", "source_url"].into_iter().collect();
    for entry in entries {
        let keys: BTreeSet<&str> = entry.keys().map(String::as_str).collect();
        if keys != expected_keys {
            return Diagnostic::fail(
                CheckId::RemoteUrls,
                doc.field_line("skills"),
                "skills list entries must have exactly name and source_url",
            );
        }
        let url = &entry["source_url"];
        if !is_valid_remote_skill_url(url) {
            return Diagnostic::fail(
                CheckId::RemoteUrls,
                doc.field_line("skills"),
                format!(
                    "invalid remote skill URL {:?} (expected https://github.com/...)",
                    url
                ),
            );
        }
    }
    Diagnostic::pass(CheckId::RemoteUrls, "All remote skill URLs OK")
}
