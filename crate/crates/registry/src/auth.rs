//! Bearer-token authentication.
//!
//! Tokens are provisioned out of band (the `add-token` admin command) and
//! map to a GitHub handle plus flags. The OAuth endpoints the hosted
//! deployment would use respond 501 here.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// One provisioned token.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenInfo {
    pub token: String,
    pub github_handle: String,
    #[serde(default)]
    pub verified: bool,
    /// Admin tokens may patch/delete any record.
    #[serde(default)]
    pub admin: bool,
}

/// The set of recognized tokens.
#[derive(Debug, Default, Clone)]
pub struct TokenSet {
    by_token: HashMap<String, TokenInfo>,
}

impl TokenSet {
    pub fn new(tokens: Vec<TokenInfo>) -> TokenSet {
        TokenSet {
            by_token: tokens.into_iter().map(|t| (t.token.clone(), t)).collect(),
        }
    }

    /// Load from a JSON file holding a list of token entries. A missing file
    /// yields an empty set.
    pub fn load(path: &Path) -> anyhow::Result<TokenSet> {
        match std::fs::read_to_string(path) {
            Ok(text) => {
                let tokens: Vec<TokenInfo> = serde_json::from_str(&text)?;
                Ok(TokenSet::new(tokens))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(TokenSet::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn lookup(&self, token: &str) -> Option<&TokenInfo> {
        self.by_token.get(token)
    }

    pub fn entries(&self) -> impl Iterator<Item = &TokenInfo> {
        self.by_token.values()
    }
}

/// Extract the bearer token from an `Authorization` header value.
pub fn bearer_token(header_value: &str) -> Option<&str> {
    header_value
        .strip_prefix("Bearer ")
        .map(str::trim)
        .filter(|t| !t.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bearer_extraction() {
        assert_eq!(bearer_token("Bearer abc"), Some("abc"));
        assert_eq!(bearer_token("Basic abc"), None);
        assert_eq!(bearer_token("Bearer "), None);
    }

    #[test]
    fn lookup_by_token() {
        let set = TokenSet::new(vec![TokenInfo {
            token: "t1".into(),
            github_handle: "alice".into(),
            verified: true,
            admin: false,
        }]);
        assert_eq!(set.lookup("t1").unwrap().github_handle, "alice");
        assert!(set.lookup("t2").is_none());
    }
}
