//! Full-text ranking and trigram fuzzy matching for registry search.
//!
//! Ranking weights name-token hits double over description-token hits;
//! trigram similarity over padded word trigrams catches near-miss name
//! queries that share no whole token.

use std::collections::BTreeSet;

use skilldex_core::registry::types::{SkillRecord, SkillsetRecord, TrustTier};

/// Minimum trigram similarity for a fuzzy name match.
pub const FUZZY_THRESHOLD: f64 = 0.3;

/// Default and maximum result counts.
pub const DEFAULT_LIMIT: usize = 20;

/// Lowercase maximal alphanumeric runs.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Full-text rank: `2 * |query ∩ name tokens| + |query ∩ description tokens|`.
pub fn fts_rank(query: &str, name: &str, description: &str) -> u32 {
    let query_tokens = tokens(query);
    if query_tokens.is_empty() {
        return 0;
    }
    let name_tokens = tokens(name);
    let desc_tokens = tokens(description);
    let name_hits = query_tokens.intersection(&name_tokens).count() as u32;
    let desc_hits = query_tokens.intersection(&desc_tokens).count() as u32;
    2 * name_hits + desc_hits
}

/// Padded word trigrams: each lowercase word gets two leading spaces and one
/// trailing space, then all 3-grams are collected.
fn trigrams(text: &str) -> BTreeSet<String> {
    let mut grams = BTreeSet::new();
    for word in text
        .to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        let padded: Vec<char> = format!("  {} ", word).chars().collect();
        for window in padded.windows(3) {
            grams.insert(window.iter().collect());
        }
    }
    grams
}

/// Jaccard similarity of the two strings' padded trigram sets, in [0, 1].
pub fn trigram_similarity(a: &str, b: &str) -> f64 {
    let ta = trigrams(a);
    let tb = trigrams(b);
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let intersection = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    if union == 0 {
        return 0.0;
    }
    intersection as f64 / union as f64
}

/// Filter and ranking parameters for one search call.
pub struct SearchQuery {
    pub query: Option<String>,
    pub tier: Option<TrustTier>,
    pub tags: Vec<String>,
    pub limit: usize,
}

/// Fields search needs from a record, regardless of kind.
pub trait Searchable {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn trust_tier(&self) -> TrustTier;
    fn tags(&self) -> &[String];
    fn install_count(&self) -> u64;
}

impl Searchable for SkillRecord {
    fn name(&self) -> &str {
        &self.name
    }
    fn description(&self) -> &str {
        &self.description
    }
    fn trust_tier(&self) -> TrustTier {
        self.trust_tier
    }
    fn tags(&self) -> &[String] {
        &self.tags
    }
    fn install_count(&self) -> u64 {
        self.install_count
    }
}

impl Searchable for SkillsetRecord {
    fn name(&self) -> &str {
        &self.name
    }
    fn description(&self) -> &str {
        &self.description
    }
    fn trust_tier(&self) -> TrustTier {
        self.trust_tier
    }
    fn tags(&self) -> &[String] {
        &self.tags
    }
    fn install_count(&self) -> u64 {
        self.install_count
    }
}

/// Apply filters and ranking over candidate records.
///
/// With a query: candidates must score a positive full-text rank or clear
/// the trigram threshold on the name; order is rank desc, then similarity
/// desc, then name. Without a query: all records matching the filters,
/// ordered by install count desc, then name. Truncated to `limit`.
pub fn run_search<R: Searchable + Clone>(records: &[R], params: &SearchQuery) -> Vec<R> {
    let filtered: Vec<&R> = records
        .iter()
        .filter(|r| params.tier.map(|t| r.trust_tier() == t).unwrap_or(true))
        .filter(|r| {
            params
                .tags
                .iter()
                .all(|wanted| r.tags().iter().any(|t| t == wanted))
        })
        .collect();

    let mut out: Vec<R> = match &params.query {
        Some(query) if !query.trim().is_empty() => {
            let mut ranked: Vec<(u32, f64, &R)> = filtered
                .into_iter()
                .filter_map(|r| {
                    let rank = fts_rank(query, r.name(), r.description());
                    let similarity = trigram_similarity(query, r.name());
                    if rank > 0 || similarity >= FUZZY_THRESHOLD {
                        Some((rank, similarity, r))
                    } else {
                        None
                    }
                })
                .collect();
            ranked.sort_by(|a, b| {
                b.0.cmp(&a.0)
                    .then(b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal))
                    .then(a.2.name().cmp(b.2.name()))
            });
            ranked.into_iter().map(|(_, _, r)| r.clone()).collect()
        }
        _ => {
            let mut all: Vec<&R> = filtered;
            all.sort_by(|a, b| {
                b.install_count()
                    .cmp(&a.install_count())
                    .then(a.name().cmp(b.name()))
            });
            all.into_iter().cloned().collect()
        }
    };

    out.truncate(params.limit);
    out
}
