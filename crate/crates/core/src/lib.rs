//! Core library for skilldex, a package manager for agent skill packages.
//!
//! A *skill* is a directory containing a `SKILL.md` file (YAML frontmatter
//! followed by Markdown instructions). A *skillset* bundles related skills
//! with shared assets under a `SKILLSET.md` root. This crate provides:
//!
//! - [`document`]: frontmatter/body parsing with per-field line tracking
//! - [`validate`]: format conformance scoring with compiler-style diagnostics
//! - [`scope`]: the global/shared/project scope hierarchy and name resolution
//! - [`manifest`]: atomic load/save of the per-scope `skilldex.json`
//! - [`install`]: skill installation from registry names, git URLs, and paths
//! - [`skillset`]: skillset parsing and install orchestration
//! - [`registry`]: wire types and the HTTP client for the registry API
//! - [`suggest`]: the context-gathering / proposal / approval workflow
//! - [`config`]: the user-level CLI configuration file

pub mod config;
pub mod document;
pub mod fsutil;
pub mod install;
pub mod manifest;
pub mod registry;
pub mod scope;
pub mod skillset;
pub mod suggest;
pub mod validate;
