//! Pulls the first grounding-act label or the first JSON array out of raw
//! model output. Nothing here validates the array as a graph.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::GroundingAct;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionFailure {
    #[error("no grounding act label found")]
    NoLabelFound,
    #[error("no balanced JSON array found")]
    NoArrayFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractKind {
    Act,
    Graph,
}

impl fmt::Display for ExtractKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtractKind::Act => "act",
            ExtractKind::Graph => "graph",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// When the first array candidate never balances, try later candidates
    /// instead of failing.
    pub retry_later_candidates: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extracted<'a> {
    Act(GroundingAct),
    Graph(&'a str),
}

pub fn extract(kind: ExtractKind, text: &str, opts: ExtractOptions) -> Result<Extracted<'_>, ExtractionFailure> {
    match kind {
        ExtractKind::Act => extract_act(text).map(Extracted::Act),
        ExtractKind::Graph => extract_jsonld_with(text, opts).map(Extracted::Graph),
    }
}

/// First label among explicit/implicit/clarification, matched
/// case-insensitively as a whole word (delimited by non-letters).
pub fn extract_act(text: &str) -> Result<GroundingAct, ExtractionFailure> {
    let mut previous_is_letter = false;
    for (i, c) in text.char_indices() {
        if !previous_is_letter {
            for act in GroundingAct::ALL {
                let label = act.as_str();
                let Some(candidate) = text.get(i..i + label.len()) else { continue };
                if !candidate.eq_ignore_ascii_case(label) {
                    continue;
                }
                let after = text[i + label.len()..].chars().next();
                if !after.is_some_and(char::is_alphabetic) {
                    return Ok(act);
                }
            }
        }
        previous_is_letter = c.is_alphabetic();
    }
    Err(ExtractionFailure::NoLabelFound)
}

pub fn extract_jsonld(text: &str) -> Result<&str, ExtractionFailure> {
    extract_jsonld_with(text, ExtractOptions::default())
}

/// First `[`-anchored balanced region of `text`, returned verbatim.
///
/// Outside the array, double-quoted prose is skipped so a `[` inside a
/// quotation is not an anchor. Inside the array, brackets within string
/// literals (including escaped quotes) do not count.
pub fn extract_jsonld_with(text: &str, opts: ExtractOptions) -> Result<&str, ExtractionFailure> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    while let Some(start) = next_anchor(bytes, pos) {
        if let Some(end) = balanced_end(bytes, start) {
            return Ok(&text[start..end]);
        }
        if !opts.retry_later_candidates {
            break;
        }
        pos = start + 1;
    }
    Err(ExtractionFailure::NoArrayFound)
}

fn next_anchor(bytes: &[u8], from: usize) -> Option<usize> {
    let mut in_quote = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(from) {
        if in_quote {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_quote = false;
            }
        } else if b == b'"' {
            in_quote = true;
        } else if b == b'[' {
            return Some(i);
        }
    }
    None
}

fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'[' => depth += 1,
            b']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}
