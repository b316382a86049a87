//! Run manifests: one header line followed by one JSON line per instance.
//!
//! Timestamps and cache statistics live in the header's `sidecar`, which
//! [`RunManifest::content_digest`] ignores.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ground_eval_core::extract::{extract, ExtractKind, ExtractOptions, Extracted, ExtractionFailure};
use ground_eval_core::{GroundingAct, Task};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::config::RunConfig;

pub const EXTENSION: &str = ".manifest.jsonl";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub started_at: String,
    pub finished_at: String,
    pub backend_calls: u64,
    pub cache_hits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub toolkit_version: String,
    pub task: Task,
    pub config: RunConfig,
    pub instance_count: usize,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub sidecar: Sidecar,
}

/// Outcome of extraction on one raw output; exactly one of `act`,
/// `graph_text` and `failure` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub kind: ExtractKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub act: Option<GroundingAct>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<ExtractionFailure>,
}

impl ExtractionRecord {
    pub fn of(kind: ExtractKind, raw: &str, opts: ExtractOptions) -> Self {
        let mut record = ExtractionRecord { kind, act: None, graph_text: None, failure: None };
        match extract(kind, raw, opts) {
            Ok(Extracted::Act(act)) => record.act = Some(act),
            Ok(Extracted::Graph(text)) => record.graph_text = Some(text.into()),
            Err(failure) => record.failure = Some(failure),
        }
        record
    }
}

pub fn extract_kind(task: Task) -> ExtractKind {
    match task {
        Task::Acts => ExtractKind::Act,
        Task::Knowledge => ExtractKind::Graph,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub conversation_id: String,
    pub turn_index: usize,
    pub request_digest: String,
    /// Model output exactly as returned.
    pub raw_output: String,
    pub extracted: ExtractionRecord,
    /// Gold label (a JSON string) or gold graph, as raw JSON.
    #[serde(with = "raw_json")]
    pub gold: String,
}

mod raw_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(text: &str, s: S) -> Result<S::Ok, S::Error> {
        RawValue::from_string(text.to_owned()).map_err(serde::ser::Error::custom)?.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
        Box::<RawValue>::deserialize(d).map(|raw| raw.get().to_owned())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("header says {declared} instances but {found} records follow")]
    CountMismatch { declared: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub header: ManifestHeader,
    pub records: Vec<InstanceRecord>,
}

impl RunManifest {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, ManifestError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(ManifestError::Format { line: 1, message: "empty manifest".into() })?;
        let header: ManifestHeader =
            serde_json::from_str(first).map_err(|e| ManifestError::Format { line: 1, message: e.to_string() })?;
        let records = lines
            .map(|(i, line)| {
                serde_json::from_str(line).map_err(|e| ManifestError::Format { line: i + 1, message: e.to_string() })
            })
            .collect::<Result<Vec<InstanceRecord>, _>>()?;
        if records.len() != header.instance_count {
            return Err(ManifestError::CountMismatch { declared: header.instance_count, found: records.len() });
        }
        Ok(RunManifest { header, records })
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.into(), source })?;
        Self::parse_jsonl(&text)
    }

    /// Writes via a temporary file so readers never see a half-written manifest.
    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let io_err = |source| ManifestError::Io { path: path.into(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let tmp = path.with_extension("jsonl.tmp");
        fs::write(&tmp, self.to_jsonl()).map_err(io_err)?;
        fs::rename(&tmp, path).map_err(io_err)
    }

    /// SHA-256 of the manifest text with the sidecar cleared.
    pub fn content_digest(&self) -> String {
        let mut stripped = self.clone();
        stripped.header.sidecar = Sidecar::default();
        hex::encode(Sha256::digest(stripped.to_jsonl().as_bytes()))
    }
}

/// Report file stem for a manifest path (`x.manifest.jsonl` gives `x`).
pub fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(EXTENSION).map(str::to_owned).unwrap_or(name)
}
