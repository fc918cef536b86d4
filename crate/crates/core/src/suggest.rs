//! The suggest workflow: gather project context, generate skill proposals,
//! and run human approval.
//!
//! Proposal generation is pluggable. The default generator is a
//! deterministic heuristic over token overlap between the project context
//! and registry metadata; a remote HTTP generator can be configured instead.
//! Approval never installs anything: approved registry-available proposals
//! are emitted as `skillpm install` command lines for the user to run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest;
use crate::registry::client::{ClientError, RegistryClient};
use crate::scope::{self, ScopeContext, ScopeLevel};

/// Words ignored when tokenizing project context.
pub const STOP_WORDS: [&str; 50] = [
    "a", "about", "all", "an", "and", "any", "are", "as", "at", "be", "but", "by", "can", "do",
    "for", "from", "has", "have", "how", "if", "in", "into", "is", "it", "its", "my", "no", "not",
    "of", "on", "or", "our", "should", "so", "that", "the", "their", "this", "to", "use", "used",
    "uses", "using", "we", "what", "when", "which", "will", "with", "you",
];

const README_EXCERPT_LINES: usize = 100;
const DEFAULT_MAX_PROPOSALS: usize = 5;

/// Selected `package.json` metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PackageMeta {
    pub name: Option<String>,
    pub description: Option<String>,
    pub scripts: Vec<String>,
    pub dependencies: Vec<String>,
}

/// Project context assembled for proposal generation.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ContextBundle {
    /// First 100 lines of README.md, or empty.
    pub readme_excerpt: String,
    pub package_meta: Option<PackageMeta>,
    /// File names under the project's agent configuration directory.
    pub agent_config_listing: Vec<String>,
    /// Installed skills across all scopes, in precedence order.
    pub installed_skills: Vec<(String, ScopeLevel)>,
}

/// One proposed skill.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuggestionProposal {
    pub skill_name: String,
    pub reason: String,
    pub suggested_scope: ScopeLevel,
    /// Whether the registry knows this name at generation time.
    pub available: bool,
}

/// An approved proposal with its final (possibly overridden) scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApprovedProposal {
    #[serde(flatten)]
    pub proposal: SuggestionProposal,
    pub final_scope: ScopeLevel,
}

/// Outcome of the approval phase. No installation has happened.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApprovalResult {
    pub approved: Vec<ApprovedProposal>,
    pub rejected: Vec<SuggestionProposal>,
    /// One `skillpm install` line per approved-and-available proposal.
    pub install_commands: Vec<String>,
}

/// Generator output plus non-fatal notes (e.g. registry unreachable).
#[derive(Debug, Clone, Default)]
pub struct GeneratorOutput {
    pub proposals: Vec<SuggestionProposal>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SuggestError {
    #[error("proposal generator failed: {0}")]
    Generator(String),
}

impl SuggestError {
    pub fn code(&self) -> &'static str {
        match self {
            SuggestError::Generator(_) => "E_GENERATOR",
        }
    }
}

/// A source of skill proposals for a context bundle.
pub trait ProposalGenerator {
    fn generate(&self, bundle: &ContextBundle) -> Result<GeneratorOutput, SuggestError>;
}

/// Read project context. Missing files yield empty sections, never errors.
pub fn gather_context(project_root: &Path, ctx: &ScopeContext) -> ContextBundle {
    let readme_excerpt = std::fs::read_to_string(project_root.join("README.md"))
        .map(|text| {
            text.lines()
                .take(README_EXCERPT_LINES)
                .collect::<Vec<_>>()
                .join("\n")
        })
        .unwrap_or_default();

    let package_meta = std::fs::read_to_string(project_root.join("package.json"))
        .ok()
        .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok())
        .map(|json| PackageMeta {
            name: json.get("name").and_then(|v| v.as_str()).map(str::to_string),
            description: json
                .get("description")
                .and_then(|v| v.as_str())
                .map(str::to_string),
            scripts: object_keys(&json, "scripts"),
            dependencies: object_keys(&json, "dependencies"),
        });

    let agent_dir = project_root.join(".claude");
    let mut agent_config_listing: Vec<String> = std::fs::read_dir(&agent_dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default();
    agent_config_listing.sort();

    let mut installed_skills = Vec::new();
    if let Ok(scopes) = scope::resolve_all_scopes(ctx) {
        for config in scopes {
            if let Ok(loaded) = manifest::load_manifest(&config.manifest_path, config.level) {
                for name in loaded.manifest.skills.keys() {
                    installed_skills.push((name.clone(), config.level));
                }
            }
        }
    }

    ContextBundle {
        readme_excerpt,
        package_meta,
        agent_config_listing,
        installed_skills,
    }
}

fn object_keys(json: &serde_json::Value, field: &str) -> Vec<String> {
    json.get(field)
        .and_then(|v| v.as_object())
        .map(|o| o.keys().cloned().collect())
        .unwrap_or_default()
}

/// Render the bundle as the structured context string given to generators.
pub fn render_context(bundle: &ContextBundle) -> String {
    let mut out = String::new();
    if !bundle.readme_excerpt.is_empty() {
        out.push_str("## README (first 100 lines)\n");
        out.push_str(&bundle.readme_excerpt);
        out.push_str("\n\n");
    }
    if let Some(meta) = &bundle.package_meta {
        out.push_str("## package.json\n");
        if let Some(name) = &meta.name {
            out.push_str(&format!("name: {}\n", name));
        }
        if let Some(desc) = &meta.description {
            out.push_str(&format!("description: {}\n", desc));
        }
        if !meta.scripts.is_empty() {
            out.push_str(&format!("scripts: {}\n", meta.scripts.join(", ")));
        }
        if !meta.dependencies.is_empty() {
            out.push_str(&format!("dependencies: {}\n", meta.dependencies.join(", ")));
        }
        out.push('\n');
    }
    if !bundle.agent_config_listing.is_empty() {
        out.push_str("## Agent configuration directory\n");
        out.push_str(&bundle.agent_config_listing.join("\n"));
        out.push_str("\n\n");
    }
    out.push_str("## Installed skills\n");
    if bundle.installed_skills.is_empty() {
        out.push_str("(none)\n");
    } else {
        for (name, level) in &bundle.installed_skills {
            out.push_str(&format!("{} ({} scope)\n", name, level));
        }
    }
    out
}

/// Lowercase maximal alphanumeric runs, stop words removed.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty() && !STOP_WORDS.contains(t))
        .map(str::to_string)
        .collect()
}

fn bundle_tokens(bundle: &ContextBundle) -> Vec<String> {
    let mut text = bundle.readme_excerpt.clone();
    if let Some(meta) = &bundle.package_meta {
        for part in [&meta.name, &meta.description] {
            if let Some(part) = part {
                text.push(' ');
                text.push_str(part);
            }
        }
        for s in meta.scripts.iter().chain(meta.dependencies.iter()) {
            text.push(' ');
            text.push_str(s);
        }
    }
    for entry in &bundle.agent_config_listing {
        text.push(' ');
        text.push_str(entry);
    }
    tokenize(&text)
}

/// The deterministic default generator: token overlap between the project
/// context and registry search results.
pub struct HeuristicGenerator<'a> {
    pub client: &'a RegistryClient,
    pub max_proposals: usize,
}

impl<'a> HeuristicGenerator<'a> {
    pub fn new(client: &'a RegistryClient) -> Self {
        HeuristicGenerator {
            client,
            max_proposals: DEFAULT_MAX_PROPOSALS,
        }
    }
}

impl ProposalGenerator for HeuristicGenerator<'_> {
    fn generate(&self, bundle: &ContextBundle) -> Result<GeneratorOutput, SuggestError> {
        let tokens = bundle_tokens(bundle);
        if tokens.is_empty() {
            return Ok(GeneratorOutput::default());
        }

        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for token in &tokens {
            *freq.entry(token).or_default() += 1;
        }
        let mut by_freq: Vec<(&str, usize)> = freq.iter().map(|(t, c)| (*t, *c)).collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let query: Vec<&str> = by_freq.iter().take(10).map(|(t, _)| *t).collect();

        let records = match self.client.search_skills(Some(&query.join(" ")), None, Some(20), &[]) {
            Ok(records) => records,
            Err(e) => {
                return Ok(GeneratorOutput {
                    proposals: Vec::new(),
                    warnings: vec![format!("registry unreachable, no suggestions: {}", e)],
                });
            }
        };

        let bundle_set: BTreeSet<&str> = freq.keys().copied().collect();
        let installed: BTreeSet<&str> = bundle
            .installed_skills
            .iter()
            .map(|(name, _)| name.as_str())
            .collect();

        let mut ranked: Vec<(usize, String, Vec<String>)> = Vec::new();
        for record in &records {
            if installed.contains(record.name.as_str()) {
                continue;
            }
            let mut candidate_tokens: BTreeSet<String> = tokenize(&record.description)
                .into_iter()
                .collect();
            for tag in &record.tags {
                candidate_tokens.extend(tokenize(tag));
            }
            let mut shared: Vec<String> = candidate_tokens
                .iter()
                .filter(|t| bundle_set.contains(t.as_str()))
                .cloned()
                .collect();
            if shared.is_empty() {
                continue;
            }
            // Most frequent bundle tokens first, then alphabetical.
            shared.sort_by(|a, b| {
                let fa = freq.get(a.as_str()).copied().unwrap_or(0);
                let fb = freq.get(b.as_str()).copied().unwrap_or(0);
                fb.cmp(&fa).then(a.cmp(b))
            });
            ranked.push((shared.len(), record.name.clone(), shared));
        }
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        let proposals = ranked
            .into_iter()
            .take(self.max_proposals)
            .map(|(_, name, shared)| SuggestionProposal {
                skill_name: name,
                reason: format!(
                    "matched: {}",
                    shared.iter().take(3).cloned().collect::<Vec<_>>().join(", ")
                ),
                suggested_scope: ScopeLevel::Project,
                available: true,
            })
            .collect();

        Ok(GeneratorOutput {
            proposals,
            warnings: Vec::new(),
        })
    }
}

/// A generator that posts the rendered context to an HTTP endpoint and
/// decodes a proposal list.
pub struct RemoteGenerator {
    pub endpoint: String,
    pub timeout: std::time::Duration,
}

impl RemoteGenerator {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteGenerator {
            endpoint: endpoint.into(),
            timeout: std::time::Duration::from_secs(30),
        }
    }
}

impl ProposalGenerator for RemoteGenerator {
    fn generate(&self, bundle: &ContextBundle) -> Result<GeneratorOutput, SuggestError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| SuggestError::Generator(e.to_string()))?;
        let response = http
            .post(&self.endpoint)
            .json(&serde_json::json!({ "context": render_context(bundle) }))
            .send()
            .map_err(|e| SuggestError::Generator(e.to_string()))?;
        if !response.status().is_success() {
            return Err(SuggestError::Generator(format!(
                "generator endpoint returned HTTP {}",
                response.status().as_u16()
            )));
        }
        let proposals: Vec<SuggestionProposal> = response
            .json()
            .map_err(|e| SuggestError::Generator(format!("malformed generator response: {}", e)))?;
        Ok(GeneratorOutput {
            proposals,
            warnings: Vec::new(),
        })
    }
}

/// Run a generator, then re-check its output: `available` is recomputed
/// against the registry and already-installed names are filtered out.
pub fn generate_proposals(
    bundle: &ContextBundle,
    generator: &dyn ProposalGenerator,
    client: &RegistryClient,
) -> Result<GeneratorOutput, SuggestError> {
    let mut output = generator.generate(bundle)?;
    let installed: BTreeSet<&str> = bundle
        .installed_skills
        .iter()
        .map(|(name, _)| name.as_str())
        .collect();
    output.proposals.retain(|p| !installed.contains(p.skill_name.as_str()));
    for proposal in &mut output.proposals {
        proposal.available = match client.get_skill(&proposal.skill_name) {
            Ok(_) => true,
            Err(ClientError::Http { status: 404, .. }) => false,
            Err(e) => {
                output
                    .warnings
                    .push(format!("could not confirm availability of {:?}: {}", proposal.skill_name, e));
                false
            }
        };
    }
    Ok(output)
}

/// How approval runs: per-proposal prompting, or approve-everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApprovalMode {
    Interactive,
    AutoYes,
}

/// Answers per-proposal approval prompts. The CLI provides a terminal
/// implementation; tests provide a scripted one.
pub trait Prompter {
    fn ask(&mut self, prompt: &str) -> std::io::Result<String>;
}

/// A prompter answering from a fixed script.
pub struct ScriptedPrompter {
    answers: std::vec::IntoIter<String>,
}

impl ScriptedPrompter {
    pub fn new(answers: Vec<&str>) -> Self {
        ScriptedPrompter {
            answers: answers
                .into_iter()
                .map(str::to_string)
                .collect::<Vec<_>>()
                .into_iter(),
        }
    }
}

impl Prompter for ScriptedPrompter {
    fn ask(&mut self, _prompt: &str) -> std::io::Result<String> {
        Ok(self.answers.next().unwrap_or_else(|| "n".to_string()))
    }
}

/// Present proposals for approval. Interactive mode asks per proposal
/// (yes / no / a scope name to override); auto-yes approves everything at
/// the suggested scope. Approved-and-available proposals produce
/// `skillpm install <name> --scope <scope>` command lines. Nothing is
/// installed.
pub fn run_approval(
    proposals: &[SuggestionProposal],
    mode: ApprovalMode,
    prompter: &mut dyn Prompter,
) -> ApprovalResult {
    let mut result = ApprovalResult::default();
    for proposal in proposals {
        let decision = match mode {
            ApprovalMode::AutoYes => Some(proposal.suggested_scope),
            ApprovalMode::Interactive => prompt_decision(proposal, prompter),
        };
        match decision {
            Some(final_scope) => {
                if proposal.available {
                    result.install_commands.push(format!(
                        "skillpm install {} --scope {}",
                        proposal.skill_name, final_scope
                    ));
                }
                result.approved.push(ApprovedProposal {
                    proposal: proposal.clone(),
                    final_scope,
                });
            }
            None => result.rejected.push(proposal.clone()),
        }
    }
    result
}

fn prompt_decision(
    proposal: &SuggestionProposal,
    prompter: &mut dyn Prompter,
) -> Option<ScopeLevel> {
    let prompt = format!(
        "{}  [{}] [{} scope]\n  Reason: {}\n  Approve? (Y/n/scope): ",
        proposal.skill_name,
        if proposal.available { "available" } else { "not in registry" },
        proposal.suggested_scope,
        proposal.reason
    );
    for _ in 0..3 {
        let answer = match prompter.ask(&prompt) {
            Ok(answer) => answer.trim().to_lowercase(),
            Err(_) => return None,
        };
        match answer.as_str() {
            "" | "y" | "yes" => return Some(proposal.suggested_scope),
            "n" | "no" => return None,
            other => {
                if let Some(level) = ScopeLevel::parse(other) {
                    return Some(level);
                }
            }
        }
    }
    None
}
