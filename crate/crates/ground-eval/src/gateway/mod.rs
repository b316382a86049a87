//! Chat-completion dispatch through a pluggable backend, fronted by a
//! persistent response cache.

mod cache;
mod http;
mod scripted;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use ground_eval_core::chat::RequestError;
use ground_eval_core::{digest, ChatRequest, ChatResponse};

pub use cache::{CacheError, CacheRecord, ResponseCache};
pub use http::{HttpBackend, HttpOptions, API_KEY_ENV};
pub use scripted::{Rule, Script, ScriptedBackend};

pub const DEFAULT_PARALLELISM: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(#[from] RequestError),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("network failure after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("no cached response for request {digest}")]
    ReplayMiss { digest: String },
    #[error("script has no response for request {digest}")]
    NoScriptMatch { digest: String },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// Something that turns a chat request into the model's raw text.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError>;
}

/// Answers only from the cache.
#[derive(Debug, Default, Clone, Copy)]
pub struct ReplayBackend;

impl Backend for ReplayBackend {
    fn id(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        Err(GatewayError::ReplayMiss { digest: digest(request) })
    }
}

pub struct Gateway {
    backend: Box<dyn Backend>,
    cache: Option<ResponseCache>,
    backend_calls: AtomicU64,
    cache_hits: AtomicU64,
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>, cache: Option<ResponseCache>) -> Self {
        Gateway { backend, cache, backend_calls: AtomicU64::new(0), cache_hits: AtomicU64::new(0) }
    }

    pub fn replay(cache: ResponseCache) -> Self {
        Gateway::new(Box::new(ReplayBackend), Some(cache))
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let key = digest(request);
        if let Some(record) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            self.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(ChatResponse {
                content: record.response,
                backend_id: record.backend_id,
                latency: Duration::ZERO,
                from_cache: true,
            });
        }
        let started = Instant::now();
        let content = self.backend.complete(request)?;
        let latency = started.elapsed();
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        if let Some(cache) = &self.cache {
            cache.append(CacheRecord::new(key, request.clone(), content.clone(), self.backend.id()))?;
        }
        Ok(ChatResponse { content, backend_id: self.backend.id().into(), latency, from_cache: false })
    }

    /// Requests that reached the backend (cache misses).
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::Relaxed)
    }
}
