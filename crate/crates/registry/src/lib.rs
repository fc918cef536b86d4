//! The skilldex registry service: a metadata-only HTTP registry for skills
//! and skillsets.
//!
//! Records carry name, description, source URL, trust tier, conformance
//! score, tags, and an install counter; skill content itself always lives at
//! the source URL. Storage is an embedded document store persisted to a
//! single JSON file with the same constraints a relational schema would
//! enforce (unique names, tier enum, score range). The HTTP surface is a
//! versioned REST API under `/v1/` with bearer-token auth, per-endpoint
//! fixed-window rate limits, and full-text plus trigram-fuzzy search.

pub mod auth;
pub mod fetch;
pub mod http;
pub mod rate_limit;
pub mod search;
pub mod seed;
pub mod store;

pub use auth::{TokenInfo, TokenSet};
pub use http::{spawn_server, ServerHandle, ServiceOptions, ServiceState};
pub use seed::{SeedReport, SeedSource};
pub use store::Store;
