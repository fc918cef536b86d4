//! The registry service binary: serve the API, seed from registered
//! sources, and provision tokens and seed repositories.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use skilldex_registry::auth::{TokenInfo, TokenSet};
use skilldex_registry::seed::{SeedKind, SeedSource};
use skilldex_registry::store::Store;
use skilldex_registry::{http, seed};

#[derive(Parser)]
#[command(name = "skilldex-registry", version, about = "Metadata registry for agent skill packages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        /// Listen address.
        #[arg(long, default_value = "127.0.0.1:8402")]
        addr: SocketAddr,
        /// Store file path.
        #[arg(long, default_value = "skilldex-registry.json")]
        store: PathBuf,
        /// Token file path (JSON list of token entries).
        #[arg(long)]
        tokens: Option<PathBuf>,
        /// Permit local filesystem paths as source URLs.
        #[arg(long)]
        test_mode: bool,
    },
    /// Fetch every registered seed source and upsert verified records.
    Seed {
        #[arg(long, default_value = "skilldex-registry.json")]
        store: PathBuf,
        #[arg(long)]
        test_mode: bool,
    },
    /// Register a seeding source repository.
    AddRepo {
        #[arg(long, default_value = "skilldex-registry.json")]
        store: PathBuf,
        /// Repository URL (or local path in test mode).
        #[arg(long)]
        url: String,
        /// Optional subdirectory within the repository.
        #[arg(long)]
        subpath: Option<String>,
        /// What the source contains.
        #[arg(long, value_parser = parse_kind, default_value = "skill")]
        kind: SeedKind,
    },
    /// Add a bearer token to a token file.
    AddToken {
        #[arg(long, default_value = "skilldex-tokens.json")]
        tokens: PathBuf,
        #[arg(long)]
        token: String,
        /// GitHub handle the token publishes as.
        #[arg(long)]
        handle: String,
        /// Mark the publisher as verified.
        #[arg(long)]
        verified: bool,
        /// Allow the token to modify any record.
        #[arg(long)]
        admin: bool,
    },
}

fn parse_kind(raw: &str) -> Result<SeedKind, String> {
    match raw {
        "skill" => Ok(SeedKind::Skill),
        "skillset" => Ok(SeedKind::Skillset),
        other => Err(format!("invalid kind {:?} (expected skill or skillset)", other)),
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Serve {
            addr,
            store,
            tokens,
            test_mode,
        } => {
            let token_set = match tokens {
                Some(path) => TokenSet::load(&path)?,
                None => TokenSet::default(),
            };
            let store = Store::open(&store)?;
            let state = http::ServiceState::new(store, token_set, test_mode, None)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("skilldex-registry listening on {}", listener.local_addr()?);
                http::serve(listener, state, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
                Ok::<(), anyhow::Error>(())
            })?;
            Ok(())
        }
        Command::Seed { store, test_mode } => {
            let store = Store::open(&store)?;
            let sources: Vec<SeedSource> = store.read(|v| v.seed_sources().to_vec());
            if sources.is_empty() {
                eprintln!("no seed sources registered (use add-repo)");
                return Ok(());
            }
            let report = seed::seed_sources(&store, &sources, test_mode);
            for name in &report.upserted {
                println!("upserted {}", name);
            }
            for failure in &report.failures {
                eprintln!("failed {}: {}", failure.source_url, failure.error);
            }
            if report.failures.is_empty() {
                Ok(())
            } else {
                std::process::exit(1);
            }
        }
        Command::AddRepo {
            store,
            url,
            subpath,
            kind,
        } => {
            let store = Store::open(&store)?;
            store.mutate(|m| {
                m.add_seed_source(SeedSource {
                    source_url: url.clone(),
                    subpath: subpath.clone(),
                    kind,
                });
                Ok(())
            })?;
            println!("registered {}", url);
            Ok(())
        }
        Command::AddToken {
            tokens,
            token,
            handle,
            verified,
            admin,
        } => {
            let mut entries: Vec<TokenInfo> = match std::fs::read_to_string(&tokens) {
                Ok(text) => serde_json::from_str(&text)?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
                Err(e) => return Err(e.into()),
            };
            entries.retain(|t| t.token != token);
            entries.push(TokenInfo {
                token,
                github_handle: handle,
                verified,
                admin,
            });
            let mut bytes = serde_json::to_vec_pretty(&entries)?;
            bytes.push(b'\n');
            skilldex_core::fsutil::atomic_write(&tokens, &bytes)?;
            println!("token file updated: {}", tokens.display());
            Ok(())
        }
    }
}
