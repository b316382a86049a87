use std::fs;
use std::path::Path;

use ground_eval_core::chat::Role;
use ground_eval_core::{digest, ChatRequest};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Backend, GatewayError};

/// A canned answer, selected by request digest or by a regex over the last
/// user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    pub response: String,
}

/// On-disk script: rules are tried in order, then the fallback.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default)]
    pub rules: Vec<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

enum Matcher {
    Digest(String),
    Pattern(Regex),
}

/// Deterministic offline backend driven by a [`Script`].
pub struct ScriptedBackend {
    rules: Vec<(Matcher, String)>,
    fallback: Option<String>,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Result<Self, String> {
        let mut rules = Vec::with_capacity(script.rules.len());
        for (i, rule) in script.rules.into_iter().enumerate() {
            let matcher = match (rule.digest, rule.pattern) {
                (Some(d), None) => Matcher::Digest(d),
                (None, Some(p)) => Matcher::Pattern(Regex::new(&p).map_err(|e| format!("rule {i}: {e}"))?),
                _ => return Err(format!("rule {i}: exactly one of digest or pattern is required")),
            };
            rules.push((matcher, rule.response));
        }
        Ok(ScriptedBackend { rules, fallback: script.fallback })
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let script: Script = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::new(script).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Answers every request with `response`.
    pub fn constant(response: impl Into<String>) -> Self {
        ScriptedBackend { rules: Vec::new(), fallback: Some(response.into()) }
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let key = digest(request);
        let last_user = request.messages.iter().rev().find(|m| m.role == Role::User).map_or("", |m| &m.content);
        self.rules
            .iter()
            .find(|(matcher, _)| match matcher {
                Matcher::Digest(d) => *d == key,
                Matcher::Pattern(re) => re.is_match(last_user),
            })
            .map(|(_, response)| response.clone())
            .or_else(|| self.fallback.clone())
            .ok_or(GatewayError::NoScriptMatch { digest: key })
    }
}
