//! Backend-neutral chat-completion request and response.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};
use core::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::corpus::Task;
use crate::json::write_string;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

/// Sampling temperature used for every run.
pub const DEFAULT_TEMPERATURE: f64 = 0.0;
/// Generation seed used for every run.
pub const DEFAULT_SEED: i64 = 1;
pub const ACT_MAX_TOKENS: u32 = 128;
pub const KNOWLEDGE_MAX_TOKENS: u32 = 4096;

pub fn max_tokens_for(task: Task) -> u32 {
    match task {
        Task::Acts => ACT_MAX_TOKENS,
        Task::Knowledge => KNOWLEDGE_MAX_TOKENS,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequestError {
    #[error("request has no messages")]
    NoMessages,
    #[error("first message must have the system role")]
    FirstMessageNotSystem,
    #[error("message {0} has empty content")]
    EmptyContent(usize),
    #[error("temperature must be a finite non-negative number")]
    InvalidTemperature,
    #[error("max_tokens must be positive")]
    ZeroMaxTokens,
    #[error("model id is empty")]
    EmptyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub seed: i64,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// A request with the default decoding parameters for `task`.
    pub fn for_task(
        model_id: impl Into<String>,
        messages: Vec<ChatMessage>,
        task: Task,
    ) -> Result<Self, RequestError> {
        let req = ChatRequest {
            model_id: model_id.into(),
            messages,
            temperature: DEFAULT_TEMPERATURE,
            seed: DEFAULT_SEED,
            max_tokens: max_tokens_for(task),
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), RequestError> {
        if self.model_id.is_empty() {
            return Err(RequestError::EmptyModel);
        }
        let first = self.messages.first().ok_or(RequestError::NoMessages)?;
        if first.role != Role::System {
            return Err(RequestError::FirstMessageNotSystem);
        }
        if let Some(i) = self.messages.iter().position(|m| m.content.is_empty()) {
            return Err(RequestError::EmptyContent(i));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(RequestError::InvalidTemperature);
        }
        if self.max_tokens == 0 {
            return Err(RequestError::ZeroMaxTokens);
        }
        Ok(())
    }

    /// Canonical JSON encoding hashed by [`digest`]: sorted keys, no
    /// whitespace, messages in order.
    pub fn canonical_json(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{{\"max_tokens\":{},\"messages\":[", self.max_tokens);
        for (i, m) in self.messages.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("{\"content\":");
            write_string(&mut out, &m.content);
            out.push_str(",\"role\":");
            write_string(&mut out, m.role.as_str());
            out.push('}');
        }
        out.push_str("],\"model_id\":");
        write_string(&mut out, &self.model_id);
        // -0.0 and 0.0 are the same temperature
        let temperature = if self.temperature == 0.0 { 0.0 } else { self.temperature };
        let _ = write!(out, ",\"seed\":{},\"temperature\":{}}}", self.seed, temperature);
        out
    }
}

/// Lowercase hex SHA-256 of the request's canonical encoding.
pub fn digest(req: &ChatRequest) -> String {
    hex::encode(Sha256::digest(req.canonical_json().as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    /// Exactly as returned by the backend.
    pub content: String,
    pub backend_id: String,
    pub latency: Duration,
    pub from_cache: bool,
}
