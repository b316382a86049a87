use std::thread;
use std::time::Duration;

use ground_eval_core::ChatRequest;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::Deserialize;
use serde_json::json;

use super::{Backend, GatewayError};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "GROUND_EVAL_API_KEY";

#[derive(Debug, Clone)]
pub struct HttpOptions {
    pub timeout: Duration,
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles on each further attempt.
    pub initial_backoff: Duration,
}

impl Default for HttpOptions {
    fn default() -> Self {
        HttpOptions { timeout: Duration::from_secs(120), max_attempts: 3, initial_backoff: Duration::from_secs(1) }
    }
}

/// OpenAI-compatible `chat/completions` endpoint.
pub struct HttpBackend {
    client: Client,
    endpoint: String,
    api_key: Option<String>,
    options: HttpOptions,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

enum Attempt {
    Done(Result<String, GatewayError>),
    Retry { rate_limited: bool, message: String },
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, options: HttpOptions) -> Result<Self, GatewayError> {
        let client = Client::builder()
            .timeout(options.timeout)
            .build()
            .map_err(|e| GatewayError::Network { attempts: 0, message: e.to_string() })?;
        Ok(HttpBackend { client, endpoint: endpoint.into(), api_key, options })
    }

    /// Reads the API key from `GROUND_EVAL_API_KEY`.
    pub fn from_env(endpoint: impl Into<String>, options: HttpOptions) -> Result<Self, GatewayError> {
        Self::new(endpoint, std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()), options)
    }

    fn body(request: &ChatRequest) -> serde_json::Value {
        json!({
            "model": request.model_id,
            "messages": request.messages,
            "temperature": request.temperature,
            "seed": request.seed,
            "max_tokens": request.max_tokens,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Attempt {
        let mut builder = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry { rate_limited: false, message: e.to_string() },
        };
        let status = response.status();
        match status {
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => {
                Attempt::Done(Err(GatewayError::Auth { status: status.as_u16() }))
            }
            StatusCode::TOO_MANY_REQUESTS => Attempt::Retry { rate_limited: true, message: status.to_string() },
            s if s.is_server_error() => Attempt::Retry { rate_limited: false, message: status.to_string() },
            s if !s.is_success() => {
                let text = response.text().unwrap_or_default();
                Attempt::Done(Err(GatewayError::Protocol(format!("HTTP {}: {}", s.as_u16(), text.trim()))))
            }
            _ => Attempt::Done(
                response
                    .json::<Completion>()
                    .map_err(|e| GatewayError::Protocol(e.to_string()))
                    .and_then(|c| {
                        c.choices
                            .into_iter()
                            .next()
                            .and_then(|choice| choice.message.content)
                            .ok_or_else(|| GatewayError::Protocol("response has no message content".into()))
                    }),
            ),
        }
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let body = Self::body(request);
        let attempts = self.options.max_attempts.max(1);
        let mut backoff = self.options.initial_backoff;
        let mut last = (false, String::new());
        for attempt in 1..=attempts {
            match self.attempt(&body) {
                Attempt::Done(result) => return result,
                Attempt::Retry { rate_limited, message } => last = (rate_limited, message),
            }
            if attempt < attempts {
                thread::sleep(backoff);
                backoff *= 2;
            }
        }
        match last {
            (true, _) => Err(GatewayError::RateLimited { attempts }),
            (false, message) => Err(GatewayError::Network { attempts, message }),
        }
    }
}
