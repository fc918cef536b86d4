//! Blocking HTTP client for the registry API.
//!
//! One method per endpoint; non-2xx responses decode the registry's error
//! body into a typed failure carrying the HTTP status and error code.
//! Mutating calls are never retried automatically.

use std::time::Duration;

use serde::de::DeserializeOwned;
use thiserror::Error;

use super::types::{
    ErrorBody, PublishRequest, Publisher, SkillInstallInfo, SkillRecord, SkillsetInstallInfo,
    SkillsetRecord, SpecVersions, TrustTier,
};

/// Environment variable carrying the publish token.
pub const TOKEN_ENV: &str = "SKILLDEX_TOKEN";
/// Environment variable overriding the registry base URL.
pub const REGISTRY_ENV: &str = "SKILLDEX_REGISTRY";

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Client construction parameters.
#[derive(Debug, Clone)]
pub struct ClientConfig {
    /// Registry base URL; `/v1` is appended when missing.
    pub base_url: String,
    pub auth_token: Option<String>,
    pub timeout: Duration,
}

impl ClientConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        ClientConfig {
            base_url: base_url.into(),
            auth_token: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.auth_token = token;
        self
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("registry unreachable: {0}")]
    Network(String),
    #[error("registry returned {status} ({code}): {message}")]
    Http {
        status: u16,
        code: String,
        message: String,
    },
    #[error("failed to decode registry response: {0}")]
    Decode(String),
    #[error("no auth token configured (set {TOKEN_ENV} or `skillpm config set auth.token <token>`)")]
    NoToken,
}

impl ClientError {
    pub fn code(&self) -> &'static str {
        match self {
            ClientError::Network(_) => "E_NETWORK",
            ClientError::Http { .. } => "E_HTTP",
            ClientError::Decode(_) => "E_DECODE",
            ClientError::NoToken => "E_NO_TOKEN",
        }
    }

    /// HTTP status, when this error came from a response.
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Http { status, .. } => Some(*status),
            _ => None,
        }
    }
}

/// A typed client for the registry API. Immutable after construction and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct RegistryClient {
    http: reqwest::blocking::Client,
    /// Normalized base, ending in `/v1`, no trailing slash.
    base: String,
    token: Option<String>,
}

impl RegistryClient {
    pub fn new(config: ClientConfig) -> Result<Self, ClientError> {
        let mut base = config.base_url.trim_end_matches('/').to_string();
        if !base.ends_with("/v1") {
            base.push_str("/v1");
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ClientError::Network(e.to_string()))?;
        Ok(RegistryClient {
            http,
            base,
            token: config.auth_token,
        })
    }

    /// The normalized base URL (ending in `/v1`).
    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub fn has_token(&self) -> bool {
        self.token.is_some()
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn require_token(&self) -> Result<&str, ClientError> {
        self.token.as_deref().ok_or(ClientError::NoToken)
    }

    fn decode<T: DeserializeOwned>(response: reqwest::blocking::Response) -> Result<T, ClientError> {
        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| ClientError::Network(e.to_string()))?;
        if (200..300).contains(&status) {
            return serde_json::from_str(&text).map_err(|e| ClientError::Decode(e.to_string()));
        }
        match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => Err(ClientError::Http {
                status,
                code: body.error.code,
                message: body.error.message,
            }),
            Err(_) => Err(ClientError::Http {
                status,
                code: "http_error".to_string(),
                message: if text.is_empty() {
                    format!("HTTP {}", status)
                } else {
                    text
                },
            }),
        }
    }

    fn get<T: DeserializeOwned>(&self, path: &str, query: &[(&str, String)]) -> Result<T, ClientError> {
        let mut target = self.url(path);
        if !query.is_empty() {
            let encoded: String = url::form_urlencoded::Serializer::new(String::new())
                .extend_pairs(query.iter().map(|(k, v)| (*k, v.as_str())))
                .finish();
            target.push('?');
            target.push_str(&encoded);
        }
        let response = self
            .http
            .get(target)
            .send()
            .map_err(|e| ClientError::Network(e.to_string()))?;
        Self::decode(response)
    }

    fn authed(
        &self,
        builder: reqwest::blocking::RequestBuilder,
    ) -> Result<reqwest::blocking::Response, ClientError> {
        let token = self.require_token()?;
        builder
            .bearer_auth(token)
            .send()
            .map_err(|e| ClientError::Network(e.to_string()))
    }

    fn search_query(
        query: Option<&str>,
        tier: Option<TrustTier>,
        limit: Option<u32>,
        tags: &[String],
    ) -> Vec<(&'static str, String)> {
        let mut params = Vec::new();
        if let Some(q) = query {
            params.push(("q", q.to_string()));
        }
        if let Some(tier) = tier {
            params.push(("tier", tier.as_str().to_string()));
        }
        if let Some(limit) = limit {
            params.push(("limit", limit.to_string()));
        }
        if !tags.is_empty() {
            params.push(("tags", tags.join(",")));
        }
        params
    }

    // Skill endpoints.

    pub fn search_skills(
        &self,
        query: Option<&str>,
        tier: Option<TrustTier>,
        limit: Option<u32>,
        tags: &[String],
    ) -> Result<Vec<SkillRecord>, ClientError> {
        self.get("/skills", &Self::search_query(query, tier, limit, tags))
    }

    pub fn get_skill(&self, name: &str) -> Result<SkillRecord, ClientError> {
        self.get(&format!("/skills/{}", encode(name)), &[])
    }

    pub fn skill_install_info(&self, name: &str) -> Result<SkillInstallInfo, ClientError> {
        self.get(&format!("/skills/{}/install", encode(name)), &[])
    }

    pub fn publish_skill(&self, request: &PublishRequest) -> Result<SkillRecord, ClientError> {
        let response = self.authed(self.http.post(self.url("/skills")).json(request))?;
        Self::decode(response)
    }

    pub fn patch_skill(&self, name: &str) -> Result<SkillRecord, ClientError> {
        let response = self.authed(self.http.patch(self.url(&format!("/skills/{}", encode(name)))))?;
        Self::decode(response)
    }

    pub fn delete_skill(&self, name: &str) -> Result<(), ClientError> {
        let response =
            self.authed(self.http.delete(self.url(&format!("/skills/{}", encode(name)))))?;
        let _: serde_json::Value = Self::decode(response)?;
        Ok(())
    }

    // Skillset endpoints.

    pub fn search_skillsets(
        &self,
        query: Option<&str>,
        tier: Option<TrustTier>,
        limit: Option<u32>,
        tags: &[String],
    ) -> Result<Vec<SkillsetRecord>, ClientError> {
        self.get("/skillsets", &Self::search_query(query, tier, limit, tags))
    }

    pub fn get_skillset(&self, name: &str) -> Result<SkillsetRecord, ClientError> {
        self.get(&format!("/skillsets/{}", encode(name)), &[])
    }

    pub fn skillset_install_info(&self, name: &str) -> Result<SkillsetInstallInfo, ClientError> {
        self.get(&format!("/skillsets/{}/install", encode(name)), &[])
    }

    pub fn publish_skillset(&self, request: &PublishRequest) -> Result<SkillsetRecord, ClientError> {
        let response = self.authed(self.http.post(self.url("/skillsets")).json(request))?;
        Self::decode(response)
    }

    pub fn patch_skillset(&self, name: &str) -> Result<SkillsetRecord, ClientError> {
        let response =
            self.authed(self.http.patch(self.url(&format!("/skillsets/{}", encode(name)))))?;
        Self::decode(response)
    }

    pub fn delete_skillset(&self, name: &str) -> Result<(), ClientError> {
        let response =
            self.authed(self.http.delete(self.url(&format!("/skillsets/{}", encode(name)))))?;
        let _: serde_json::Value = Self::decode(response)?;
        Ok(())
    }

    // Auth and metadata endpoints.

    pub fn auth_me(&self) -> Result<Publisher, ClientError> {
        let response = self.authed(self.http.get(self.url("/auth/me")))?;
        Self::decode(response)
    }

    pub fn spec_versions(&self) -> Result<SpecVersions, ClientError> {
        self.get("/spec-versions", &[])
    }

    pub fn spec_versions_current(&self) -> Result<String, ClientError> {
        let value: serde_json::Value = self.get("/spec-versions/current", &[])?;
        value
            .get("version")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| ClientError::Decode("missing version field".to_string()))
    }
}

/// Percent-encode a name for use as a path segment.
fn encode(name: &str) -> String {
    url::form_urlencoded::byte_serialize(name.as_bytes()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_url_gains_v1_suffix() {
        let c = RegistryClient::new(ClientConfig::new("http://127.0.0.1:9/")).unwrap();
        assert_eq!(c.base_url(), "http://127.0.0.1:9/v1");
        let c = RegistryClient::new(ClientConfig::new("http://127.0.0.1:9/v1")).unwrap();
        assert_eq!(c.base_url(), "http://127.0.0.1:9/v1");
    }

    #[test]
    fn publish_without_token_fails_locally() {
        // Port 9 (discard) is never connected: the failure must precede any request.
        let c = RegistryClient::new(ClientConfig::new("http://127.0.0.1:9")).unwrap();
        let err = c
            .publish_skill(&PublishRequest {
                name: "x".into(),
                source_url: "https://github.com/u/r".into(),
                tags: vec![],
            })
            .unwrap_err();
        assert!(matches!(err, ClientError::NoToken));
        assert_eq!(err.code(), "E_NO_TOKEN");
    }
}
