//! `.conv.json` conversation files.
//!
//! One conversation per file; a directory of such files is a corpus.
//! Embedded graphs are handed to the core parser verbatim so numeric
//! spelling and key order survive a load.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ground_eval_core::corpus::{validate_corpus, InvariantViolation, ValidationReport};
use ground_eval_core::kg::{parse_graph, serialize_graph};
use ground_eval_core::{Conversation, Corpus, Domain, GroundingAct, KnowledgeGraph, Speaker, Turn};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

pub const EXTENSION: &str = ".conv.json";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Format { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{}: {violation}", path.display())]
    Invariant { path: PathBuf, violation: InvariantViolation },
    #[error("{}: no {EXTENSION} files found", path.display())]
    Empty { path: PathBuf },
}

impl LoadError {
    pub fn path(&self) -> &Path {
        match self {
            LoadError::Io { path, .. }
            | LoadError::Format { path, .. }
            | LoadError::Invariant { path, .. }
            | LoadError::Empty { path } => path,
        }
    }
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConversationFile<'a> {
    id: String,
    domain: Domain,
    #[serde(borrow)]
    system_knowledge: &'a RawValue,
    turns: Vec<TurnFile<'a>>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TurnFile<'a> {
    index: usize,
    speaker: Speaker,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grounding_act: Option<GroundingAct>,
    #[serde(default, borrow, skip_serializing_if = "Option::is_none")]
    grounded_knowledge: Option<&'a RawValue>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, column)
}

fn graph_at(path: &Path, text: &str, raw: &RawValue, what: &str) -> Result<KnowledgeGraph, LoadError> {
    parse_graph(raw.get()).map_err(|e| {
        let base = raw.get().as_ptr() as usize - text.as_ptr() as usize;
        let (line, column) = line_column(text, base + e.offset);
        LoadError::Format { path: path.into(), line, column, message: format!("{what}: {}", e.kind) }
    })
}

/// Parses one conversation document without checking corpus invariants.
pub fn parse_conversation(path: &Path, text: &str) -> Result<Conversation, LoadError> {
    let file: ConversationFile = serde_json::from_str(text).map_err(|e| LoadError::Format {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let system_knowledge = graph_at(path, text, file.system_knowledge, "system_knowledge")?;
    let mut turns = Vec::with_capacity(file.turns.len());
    for t in file.turns {
        let grounded_knowledge = t
            .grounded_knowledge
            .map(|raw| graph_at(path, text, raw, &format!("turn {} grounded_knowledge", t.index)))
            .transpose()?;
        turns.push(Turn {
            index: t.index,
            speaker: t.speaker,
            text: t.text,
            grounding_act: t.grounding_act,
            grounded_knowledge,
        });
    }
    Ok(Conversation { id: file.id, domain: file.domain, system_knowledge, turns })
}

pub fn read_conversation(path: &Path) -> Result<Conversation, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.into(), source })?;
    parse_conversation(path, &text)
}

/// Reads a conversation and checks its invariants.
pub fn load_conversation(path: &Path) -> Result<Conversation, LoadError> {
    let conversation = read_conversation(path)?;
    conversation
        .check_invariants()
        .map_err(|violation| LoadError::Invariant { path: path.into(), violation })?;
    Ok(conversation)
}

/// `.conv.json` files under `path` in name order, or `path` itself if it is a file.
pub fn conversation_files(path: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let io_err = |source| LoadError::Io { path: path.into(), source };
    if fs::metadata(path).map_err(io_err)?.is_file() {
        return Ok(vec![path.into()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let name = entry.file_name();
        if name.to_string_lossy().ends_with(EXTENSION) && entry.path().is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(LoadError::Empty { path: path.into() });
    }
    Ok(files)
}

/// A corpus plus the file each conversation came from.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub sources: BTreeMap<String, PathBuf>,
}

impl LoadedCorpus {
    pub fn source(&self, conversation_id: &str) -> Option<&Path> {
        self.sources.get(conversation_id).map(PathBuf::as_path)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_corpus(&self.corpus)
    }
}

/// Parses every file without invariant checks, for reporting on broken corpora.
pub fn read_corpus(path: &Path) -> Result<LoadedCorpus, LoadError> {
    let mut conversations = Vec::new();
    let mut sources = BTreeMap::new();
    for file in conversation_files(path)? {
        let conversation = read_conversation(&file)?;
        sources.entry(conversation.id.clone()).or_insert(file);
        conversations.push(conversation);
    }
    Ok(LoadedCorpus { corpus: Corpus::new_unchecked(conversations), sources })
}

/// Loads and validates a corpus; the first invariant break aborts with its
/// file and turn.
pub fn load_corpus(path: &Path) -> Result<Corpus, LoadError> {
    let mut conversations = Vec::new();
    for file in conversation_files(path)? {
        conversations.push(load_conversation(&file)?);
    }
    Corpus::new(conversations).map_err(|violation| LoadError::Invariant { path: path.into(), violation })
}

pub fn conversation_to_json(conversation: &Conversation) -> String {
    let raw = |g: &KnowledgeGraph| RawValue::from_string(serialize_graph(g)).expect("serializer emits valid JSON");
    let system = raw(&conversation.system_knowledge);
    let grounded: Vec<_> = conversation.turns.iter().map(|t| t.grounded_knowledge.as_ref().map(raw)).collect();
    let file = ConversationFile {
        id: conversation.id.clone(),
        domain: conversation.domain,
        system_knowledge: &system,
        turns: conversation
            .turns
            .iter()
            .zip(&grounded)
            .map(|(t, g)| TurnFile {
                index: t.index,
                speaker: t.speaker,
                text: t.text.clone(),
                grounding_act: t.grounding_act,
                grounded_knowledge: g.as_deref(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("conversation serializes");
    out.push('\n');
    out
}

/// File name for a conversation id, keeping only portable characters.
pub fn file_name(conversation_id: &str) -> String {
    let stem: String = conversation_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    format!("{stem}{EXTENSION}")
}

pub fn write_conversation(conversation: &Conversation, path: &Path) -> io::Result<()> {
    fs::write(path, conversation_to_json(conversation))
}

pub fn write_corpus(corpus: &Corpus, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    corpus
        .conversations()
        .iter()
        .map(|c| {
            let path = dir.join(file_name(&c.id));
            write_conversation(c, &path).map(|()| path)
        })
        .collect()
}
