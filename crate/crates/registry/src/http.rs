//! The registry's HTTP surface: a versioned REST API under `/v1/`.
//!
//! Error responses use the body shape `{"error": {"code", "message"}}`.
//! Rate limiting runs as middleware keyed by peer address; 429 responses
//! carry a `Retry-After` header. The OAuth endpoints of the hosted design
//! respond 501: tokens are provisioned out of band.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{ConnectInfo, Path, Query, Request, State};
use axum::http::{header, HeaderMap, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};

use skilldex_core::document::{self, SkillDocument};
use skilldex_core::install;
use skilldex_core::registry::types::{
    PublishRequest, Publisher, SkillInstallInfo, SkillRecord, SkillsetInstallInfo, SkillsetRecord,
    SpecVersions, TrustTier,
};
use skilldex_core::skillset;
use skilldex_core::validate::{self, ValidationResult};

use crate::auth::{bearer_token, TokenInfo, TokenSet};
use crate::fetch;
use crate::rate_limit::{Decision, EndpointClass, RateLimiter, TimeSource};
use crate::search::{run_search, SearchQuery, DEFAULT_LIMIT};
use crate::seed::{seed_sources, SeedReport, SeedSource};
use crate::store::{Store, StoreError};

/// Shared service state.
pub struct ServiceState {
    pub store: Store,
    pub tokens: TokenSet,
    pub limiter: RateLimiter,
    pub test_mode: bool,
}

impl ServiceState {
    /// Build state and materialize a publisher row for every provisioned
    /// token (idempotent).
    pub fn new(
        store: Store,
        tokens: TokenSet,
        test_mode: bool,
        time_source: Option<TimeSource>,
    ) -> anyhow::Result<Arc<ServiceState>> {
        let handles: Vec<(String, bool)> = tokens
            .entries()
            .map(|t| (t.github_handle.clone(), t.verified))
            .collect();
        if !handles.is_empty() {
            store.mutate(|m| {
                for (handle, verified) in &handles {
                    m.ensure_publisher(handle, *verified);
                }
                Ok(())
            })?;
        }
        let limiter = match time_source {
            Some(time) => RateLimiter::new(time),
            None => RateLimiter::with_system_clock(),
        };
        Ok(Arc::new(ServiceState {
            store,
            tokens,
            limiter,
            test_mode,
        }))
    }

    /// Run a seeding pass against this service's store.
    pub fn seed(&self, sources: &[SeedSource]) -> SeedReport {
        seed_sources(&self.store, sources, self.test_mode)
    }
}

type AppState = Arc<ServiceState>;

/// A structured API error; renders as the registry error body.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    retry_after: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
            retry_after: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn unauthorized() -> ApiError {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "missing or invalid bearer token",
        )
    }

    fn forbidden(message: impl Into<String>) -> ApiError {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    fn not_found(what: impl Into<String>) -> ApiError {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("{} not found", what.into()),
        )
    }

    fn conflict(message: impl Into<String>) -> ApiError {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    fn fetch_failed(message: impl Into<String>) -> ApiError {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "fetch_failed", message)
    }

    fn validation_failed(message: impl Into<String>) -> ApiError {
        Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "validation_failed",
            message,
        )
    }

    fn internal(message: impl Into<String>) -> ApiError {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        ApiError::internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({
            "error": { "code": self.code, "message": self.message }
        });
        let mut response = (self.status, Json(body)).into_response();
        if let Some(secs) = self.retry_after {
            if let Ok(value) = secs.to_string().parse() {
                response.headers_mut().insert(header::RETRY_AFTER, value);
            }
        }
        response
    }
}

/// Build the full router for the service.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/skills", get(search_skills).post(publish_skill))
        .route(
            "/v1/skills/{name}",
            get(get_skill).patch(patch_skill).delete(delete_skill),
        )
        .route("/v1/skills/{name}/install", get(skill_install_info))
        .route("/v1/skillsets", get(search_skillsets).post(publish_skillset))
        .route(
            "/v1/skillsets/{name}",
            get(get_skillset).patch(patch_skillset).delete(delete_skillset),
        )
        .route("/v1/skillsets/{name}/install", get(skillset_install_info))
        .route("/v1/auth/github", get(oauth_stub))
        .route("/v1/auth/github/callback", get(oauth_stub))
        .route("/v1/auth/me", get(auth_me))
        .route("/v1/spec-versions", get(spec_versions))
        .route("/v1/spec-versions/current", get(spec_versions_current))
        .fallback(unknown_route)
        .layer(middleware::from_fn_with_state(state.clone(), rate_limit_mw))
        .with_state(state)
}

async fn unknown_route() -> ApiError {
    ApiError::not_found("route")
}

/// Classify a request path for rate limiting and consume one unit.
async fn rate_limit_mw(
    State(state): State<AppState>,
    request: Request,
    next: Next,
) -> Response {
    let class = match (request.method(), request.uri().path()) {
        (&Method::GET, "/v1/skills") | (&Method::GET, "/v1/skillsets") => EndpointClass::Search,
        (&Method::GET, path) if path.starts_with("/v1/") && path.ends_with("/install") => {
            EndpointClass::Install
        }
        _ => EndpointClass::Default,
    };
    let client_key = request
        .extensions()
        .get::<ConnectInfo<SocketAddr>>()
        .map(|info| info.0.ip().to_string())
        .unwrap_or_else(|| "unknown".to_string());

    match state.limiter.check(&client_key, class) {
        Decision::Allow => next.run(request).await,
        Decision::Deny { retry_after_secs } => {
            let mut error = ApiError::new(
                StatusCode::TOO_MANY_REQUESTS,
                "rate_limited",
                "rate limit exceeded for this endpoint class",
            );
            error.retry_after = Some(retry_after_secs);
            error.into_response()
        }
    }
}

fn parse_search(params: &HashMap<String, String>) -> Result<SearchQuery, ApiError> {
    let limit = match params.get("limit") {
        None => DEFAULT_LIMIT,
        Some(raw) => {
            let value: i64 = raw
                .parse()
                .map_err(|_| ApiError::bad_request(format!("invalid limit {:?}", raw)))?;
            if value <= 0 {
                return Err(ApiError::bad_request("limit must be a positive integer"));
            }
            value as usize
        }
    };
    let tier = match params.get("tier") {
        None => None,
        Some(raw) => Some(
            TrustTier::parse(raw)
                .ok_or_else(|| ApiError::bad_request(format!("invalid tier {:?}", raw)))?,
        ),
    };
    let tags: Vec<String> = params
        .get("tags")
        .map(|raw| {
            raw.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    Ok(SearchQuery {
        query: params.get("q").cloned(),
        tier,
        tags,
        limit,
    })
}

fn authenticate<'a>(state: &'a ServiceState, headers: &HeaderMap) -> Result<&'a TokenInfo, ApiError> {
    let value = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .ok_or_else(ApiError::unauthorized)?;
    let token = bearer_token(value).ok_or_else(ApiError::unauthorized)?;
    state.tokens.lookup(token).ok_or_else(ApiError::unauthorized)
}

fn publisher_of(state: &ServiceState, token: &TokenInfo) -> Result<Publisher, ApiError> {
    state
        .store
        .read(|v| v.publisher(&token.github_handle).cloned())
        .ok_or_else(|| ApiError::internal("publisher row missing for token"))
}

/// Owner-or-admin authorization for mutations on an existing record.
fn authorize_owner(
    state: &ServiceState,
    token: &TokenInfo,
    published_by: Option<&str>,
) -> Result<(), ApiError> {
    if token.admin {
        return Ok(());
    }
    let publisher = publisher_of(state, token)?;
    if published_by == Some(publisher.id.as_str()) {
        return Ok(());
    }
    Err(ApiError::forbidden(
        "only the publishing owner or an admin may modify this record",
    ))
}

// Skill handlers.

async fn search_skills(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<Vec<SkillRecord>>, ApiError> {
    let query = parse_search(&params)?;
    let records: Vec<SkillRecord> = state.store.read(|v| v.skills().cloned().collect());
    Ok(Json(run_search(&records, &query)))
}

async fn get_skill(
    State(state): State<AppState>,
    Path(name): Path<String>,
) -> Result<Json<SkillRecord>, ApiError> {
    state
        .store
        .read(|v| v.skill(&name).cloned())
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("skill {:?}", name)))
}

async fn skill_install_info(
    State(state): State<AppState>,
    Path(name): Path<String>,
) -> Result<Json<SkillInstallInfo>, ApiError> {
    let updated = state
        .store
        .mutate(|m| Ok(m.increment_skill_installs(&name)))?
        .ok_or_else(|| ApiError::not_found(format!("skill {:?}", name)))?;
    Ok(Json(SkillInstallInfo {
        source_url: updated.source_url.clone(),
        record: updated,
    }))
}

/// Validate a fetched tree and locate the skill whose frontmatter name
/// matches; returns its validation result and parsed document.
fn find_named_skill(
    root: &std::path::Path,
    name: &str,
) -> Result<(ValidationResult, SkillDocument), ApiError> {
    for dir in install::discover_skill_dirs(root) {
        let text = match std::fs::read_to_string(dir.join("SKILL.md")) {
            Ok(text) => text,
            Err(_) => continue,
        };
        let doc = match document::parse_skill_document(&text) {
            Ok(doc) => doc,
            Err(_) => continue, // fatal frontmatter: cannot be the named skill
        };
        if doc.scalar("name").map(str::trim) != Some(name) {
            continue;
        }
        let result = validate::validate_skill(&dir)
            .map_err(|e| ApiError::validation_failed(e.to_string()))?;
        return Ok((result, doc));
    }
    Err(ApiError::validation_failed(format!(
        "no skill named {:?} found at the source",
        name
    )))
}

fn do_publish_skill(
    state: &ServiceState,
    token: &TokenInfo,
    request: PublishRequest,
) -> Result<SkillRecord, ApiError> {
    if request.name.trim().is_empty() || request.source_url.trim().is_empty() {
        return Err(ApiError::bad_request("name and source_url are required"));
    }
    if state.store.read(|v| v.skill(&request.name).is_some()) {
        return Err(ApiError::conflict(format!(
            "skill {:?} is already published",
            request.name
        )));
    }
    let fetched = fetch::fetch_source(&request.source_url, None, state.test_mode)
        .map_err(|e| ApiError::fetch_failed(e.to_string()))?;
    let (result, doc) = find_named_skill(&fetched.root, &request.name)?;
    let publisher = publisher_of(state, token)?;

    let record = SkillRecord {
        id: uuid::Uuid::new_v4().to_string(),
        name: request.name.clone(),
        description: doc.scalar("description").unwrap_or("").to_string(),
        source_url: request.source_url.clone(),
        trust_tier: TrustTier::Community,
        score: result.score,
        spec_version: result.spec_version.clone(),
        tags: request.tags.clone(),
        install_count: 0,
        published_by: Some(publisher.id.clone()),
        author: doc
            .scalar("author")
            .map(str::to_string)
            .or_else(|| Some(token.github_handle.clone())),
    };
    state
        .store
        .mutate(|m| m.insert_skill(record.clone()))
        .map_err(|e| match e {
            StoreError::Constraint(msg) => ApiError::conflict(msg),
            other => other.into(),
        })?;
    Ok(record)
}

async fn publish_skill(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(request): Json<PublishRequest>,
) -> Result<(StatusCode, Json<SkillRecord>), ApiError> {
    let token = authenticate(&state, &headers)?.clone();
    let record = tokio::task::spawn_blocking(move || do_publish_skill(&state, &token, request))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(record)))
}

fn do_patch_skill(
    state: &ServiceState,
    token: &TokenInfo,
    name: &str,
) -> Result<SkillRecord, ApiError> {
    let existing = state
        .store
        .read(|v| v.skill(name).cloned())
        .ok_or_else(|| ApiError::not_found(format!("skill {:?}", name)))?;
    authorize_owner(state, token, existing.published_by.as_deref())?;

    let fetched = fetch::fetch_source(&existing.source_url, None, state.test_mode)
        .map_err(|e| ApiError::fetch_failed(e.to_string()))?;
    let (result, doc) = find_named_skill(&fetched.root, name)?;

    let updated = SkillRecord {
        description: doc.scalar("description").unwrap_or("").to_string(),
        score: result.score,
        spec_version: result.spec_version.clone(),
        author: doc.scalar("author").map(str::to_string).or(existing.author.clone()),
        ..existing
    };
    state.store.mutate(|m| {
        m.replace_skill(updated.clone());
        Ok(())
    })?;
    Ok(updated)
}

async fn patch_skill(
    State(state): State<AppState>,
    Path(name): Path<String>,
    headers: HeaderMap,
) -> Result<Json<SkillRecord>, ApiError> {
    let token = authenticate(&state, &headers)?.clone();
    let record = tokio::task::spawn_blocking(move || do_patch_skill(&state, &token, &name))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(record))
}

async fn delete_skill(
    State(state): State<AppState>,
    Path(name): Path<String>,
    headers: HeaderMap,
) -> Result<Json<serde_json::Value>, ApiError> {
    let token = authenticate(&state, &headers)?;
    let existing = state
        .store
        .read(|v| v.skill(&name).cloned())
        .ok_or_else(|| ApiError::not_found(format!("skill {:?}", name)))?;
    authorize_owner(&state, token, existing.published_by.as_deref())?;
    state.store.mutate(|m| {
        m.remove_skill(&name);
        Ok(())
    })?;
    Ok(Json(serde_json::json!({ "deleted": name })))
}

// Skillset handlers.

async fn search_skillsets(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<Vec<SkillsetRecord>>, ApiError> {
    let query = parse_search(&params)?;
    let records: Vec<SkillsetRecord> = state.store.read(|v| v.skillsets().cloned().collect());
    Ok(Json(run_search(&records, &query)))
}

async fn get_skillset(
    State(state): State<AppState>,
    Path(name): Path<String>,
) -> Result<Json<SkillsetRecord>, ApiError> {
    state
        .store
        .read(|v| v.skillset(&name).cloned())
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("skillset {:?}", name)))
}

async fn skillset_install_info(
    State(state): State<AppState>,
    Path(name): Path<String>,
) -> Result<Json<SkillsetInstallInfo>, ApiError> {
    let updated = state
        .store
        .mutate(|m| Ok(m.increment_skillset_installs(&name)))?
        .ok_or_else(|| ApiError::not_found(format!("skillset {:?}", name)))?;
    Ok(Json(SkillsetInstallInfo {
        source_url: updated.source_url.clone(),
        record: updated,
    }))
}

fn find_named_skillset(
    root: &std::path::Path,
    name: &str,
) -> Result<(ValidationResult, SkillDocument), ApiError> {
    let dir = fetch::find_skillset_dir(root)
        .ok_or_else(|| ApiError::validation_failed("no SKILLSET.md found at the source"))?;
    let text = std::fs::read_to_string(dir.join("SKILLSET.md"))
        .map_err(|e| ApiError::fetch_failed(e.to_string()))?;
    let doc = document::parse_skill_document(&text)
        .map_err(|e| ApiError::validation_failed(format!("fatal frontmatter: {}", e)))?;
    if doc.scalar("name").map(str::trim) != Some(name) {
        return Err(ApiError::validation_failed(format!(
            "no skillset named {:?} found at the source",
            name
        )));
    }
    let result = validate::validate_skillset(&dir)
        .map_err(|e| ApiError::validation_failed(e.to_string()))?;
    if result.error_count > 0 {
        return Err(ApiError::validation_failed(format!(
            "skillset validation failed: {}",
            result.problem_messages().join("; ")
        )));
    }
    Ok((result, doc))
}

fn do_publish_skillset(
    state: &ServiceState,
    token: &TokenInfo,
    request: PublishRequest,
) -> Result<SkillsetRecord, ApiError> {
    if request.name.trim().is_empty() || request.source_url.trim().is_empty() {
        return Err(ApiError::bad_request("name and source_url are required"));
    }
    if state.store.read(|v| v.skillset(&request.name).is_some()) {
        return Err(ApiError::conflict(format!(
            "skillset {:?} is already published",
            request.name
        )));
    }
    let fetched = fetch::fetch_source(&request.source_url, None, state.test_mode)
        .map_err(|e| ApiError::fetch_failed(e.to_string()))?;
    let (result, doc) = find_named_skillset(&fetched.root, &request.name)?;
    let publisher = publisher_of(state, token)?;
    let refs = skillset::remote_refs_of(&doc);

    let record = SkillsetRecord {
        id: uuid::Uuid::new_v4().to_string(),
        name: request.name.clone(),
        description: doc.scalar("description").unwrap_or("").to_string(),
        source_url: request.source_url.clone(),
        trust_tier: TrustTier::Community,
        score: result.score,
        spec_version: result.spec_version.clone(),
        tags: request.tags.clone(),
        install_count: 0,
        published_by: Some(publisher.id.clone()),
        author: doc
            .scalar("author")
            .map(str::to_string)
            .or_else(|| Some(token.github_handle.clone())),
        skill_count: refs.len(),
        skill_refs: refs,
    };
    state
        .store
        .mutate(|m| m.insert_skillset(record.clone()))
        .map_err(|e| match e {
            StoreError::Constraint(msg) => ApiError::conflict(msg),
            other => other.into(),
        })?;
    Ok(record)
}

async fn publish_skillset(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(request): Json<PublishRequest>,
) -> Result<(StatusCode, Json<SkillsetRecord>), ApiError> {
    let token = authenticate(&state, &headers)?.clone();
    let record = tokio::task::spawn_blocking(move || do_publish_skillset(&state, &token, request))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(record)))
}

fn do_patch_skillset(
    state: &ServiceState,
    token: &TokenInfo,
    name: &str,
) -> Result<SkillsetRecord, ApiError> {
    let existing = state
        .store
        .read(|v| v.skillset(name).cloned())
        .ok_or_else(|| ApiError::not_found(format!("skillset {:?}", name)))?;
    authorize_owner(state, token, existing.published_by.as_deref())?;

    let fetched = fetch::fetch_source(&existing.source_url, None, state.test_mode)
        .map_err(|e| ApiError::fetch_failed(e.to_string()))?;
    let (result, doc) = find_named_skillset(&fetched.root, name)?;
    let refs = skillset::remote_refs_of(&doc);

    let updated = SkillsetRecord {
        description: doc.scalar("description").unwrap_or("").to_string(),
        score: result.score,
        spec_version: result.spec_version.clone(),
        author: doc.scalar("author").map(str::to_string).or(existing.author.clone()),
        skill_count: refs.len(),
        skill_refs: refs,
        ..existing
    };
    state.store.mutate(|m| {
        m.replace_skillset(updated.clone());
        Ok(())
    })?;
    Ok(updated)
}

async fn patch_skillset(
    State(state): State<AppState>,
    Path(name): Path<String>,
    headers: HeaderMap,
) -> Result<Json<SkillsetRecord>, ApiError> {
    let token = authenticate(&state, &headers)?.clone();
    let record = tokio::task::spawn_blocking(move || do_patch_skillset(&state, &token, &name))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(record))
}

async fn delete_skillset(
    State(state): State<AppState>,
    Path(name): Path<String>,
    headers: HeaderMap,
) -> Result<Json<serde_json::Value>, ApiError> {
    let token = authenticate(&state, &headers)?;
    let existing = state
        .store
        .read(|v| v.skillset(&name).cloned())
        .ok_or_else(|| ApiError::not_found(format!("skillset {:?}", name)))?;
    authorize_owner(&state, token, existing.published_by.as_deref())?;
    state.store.mutate(|m| {
        m.remove_skillset(&name);
        Ok(())
    })?;
    Ok(Json(serde_json::json!({ "deleted": name })))
}

// Auth and metadata handlers.

async fn oauth_stub() -> ApiError {
    ApiError::new(
        StatusCode::NOT_IMPLEMENTED,
        "not_implemented",
        "GitHub OAuth is not available on this deployment; tokens are provisioned by the operator",
    )
}

async fn auth_me(
    State(state): State<AppState>,
    headers: HeaderMap,
) -> Result<Json<Publisher>, ApiError> {
    let token = authenticate(&state, &headers)?;
    let publisher = publisher_of(&state, token)?;
    Ok(Json(publisher))
}

async fn spec_versions() -> Json<SpecVersions> {
    Json(SpecVersions {
        versions: vec![validate::BUILTIN_SPEC_VERSION.to_string()],
        current: validate::BUILTIN_SPEC_VERSION.to_string(),
    })
}

async fn spec_versions_current() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "version": validate::BUILTIN_SPEC_VERSION }))
}

// Serving.

/// Construction parameters for a service instance.
pub struct ServiceOptions {
    pub addr: Option<SocketAddr>,
    pub store_path: PathBuf,
    pub tokens: TokenSet,
    pub test_mode: bool,
    pub time_source: Option<TimeSource>,
}

/// A running server on a background thread.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub state: Arc<ServiceState>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<ServiceState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(
        listener,
        router(state).into_make_service_with_connect_info::<SocketAddr>(),
    )
    .with_graceful_shutdown(shutdown)
    .await
}

/// Start the service on a background thread and return once it is bound.
/// Used by tests and by embedding callers; the binary calls [`serve`]
/// directly.
pub fn spawn_server(options: ServiceOptions) -> anyhow::Result<ServerHandle> {
    let store = Store::open(&options.store_path)?;
    let state = ServiceState::new(store, options.tokens, options.test_mode, options.time_source)?;
    let bind_addr = options
        .addr
        .unwrap_or_else(|| "127.0.0.1:0".parse().expect("loopback addr"));

    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
    let thread_state = state.clone();
    let thread = std::thread::spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("tokio runtime");
        runtime.block_on(async move {
            let listener = match tokio::net::TcpListener::bind(bind_addr).await {
                Ok(listener) => listener,
                Err(e) => {
                    let _ = addr_tx.send(Err(e));
                    return;
                }
            };
            let addr = listener.local_addr().expect("bound addr");
            let _ = addr_tx.send(Ok(addr));
            let _ = serve(listener, thread_state, async {
                let _ = shutdown_rx.await;
            })
            .await;
        });
    });

    let addr = addr_rx
        .recv_timeout(std::time::Duration::from_secs(10))
        .map_err(|_| anyhow::anyhow!("server did not bind within 10s"))??;

    Ok(ServerHandle {
        addr,
        state,
        shutdown: Some(shutdown_tx),
        thread: Some(thread),
    })
}
