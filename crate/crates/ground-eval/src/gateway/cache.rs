use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use ground_eval_core::ChatRequest;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cache {}: line {line}: {message}", path.display())]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("cache {} does not exist", path.display())]
    Missing { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub digest: String,
    pub request: ChatRequest,
    pub response: String,
    pub backend_id: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

impl CacheRecord {
    pub fn new(digest: String, request: ChatRequest, response: String, backend_id: &str) -> Self {
        CacheRecord {
            digest,
            request,
            response,
            backend_id: backend_id.into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }
}

/// Append-only JSON-lines store of responses keyed by request digest.
///
/// The first record for a digest wins; later duplicates are kept on disk
/// but never served.
pub struct ResponseCache {
    path: PathBuf,
    index: Mutex<HashMap<String, CacheRecord>>,
    file: Mutex<File>,
}

impl ResponseCache {
    /// Opens or creates the cache at `path`.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let io_err = |source| CacheError::Io { path: path.into(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut index = HashMap::new();
        let mut keep = None;
        let mut unterminated = false;
        if path.exists() {
            let text = fs::read_to_string(path).map_err(io_err)?;
            let mut offset = 0;
            let lines: Vec<&str> = text.split_inclusive('\n').collect();
            for (i, line) in lines.iter().enumerate() {
                let start = offset;
                offset += line.len();
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(line) {
                    Ok(record) => {
                        index.entry(record.digest.clone()).or_insert(record);
                    }
                    // a torn final write from an interrupted run
                    Err(_) if i + 1 == lines.len() && !line.ends_with('\n') => keep = Some(start),
                    Err(e) => {
                        return Err(CacheError::Corrupt { path: path.into(), line: i + 1, message: e.to_string() })
                    }
                }
            }
            unterminated = keep.is_none() && !text.is_empty() && !text.ends_with('\n');
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err)?;
        if let Some(len) = keep {
            file.set_len(len as u64).map_err(io_err)?;
        }
        if unterminated {
            file.write_all(b"\n").map_err(io_err)?;
        }
        Ok(ResponseCache { path: path.into(), index: Mutex::new(index), file: Mutex::new(file) })
    }

    /// Opens an existing cache; a missing file is an error.
    pub fn open_existing(path: &Path) -> Result<Self, CacheError> {
        if !path.is_file() {
            return Err(CacheError::Missing { path: path.into() });
        }
        Self::open(path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, digest: &str) -> Option<CacheRecord> {
        self.index.lock().expect("cache index lock").get(digest).cloned()
    }

    pub fn len(&self) -> usize {
        self.index.lock().expect("cache index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn append(&self, record: CacheRecord) -> Result<(), CacheError> {
        let mut line = serde_json::to_string(&record).expect("cache record serializes");
        line.push('\n');
        {
            let mut file = self.file.lock().expect("cache file lock");
            file.write_all(line.as_bytes())
                .and_then(|()| file.flush())
                .map_err(|source| CacheError::Io { path: self.path.clone(), source })?;
        }
        self.index.lock().expect("cache index lock").entry(record.digest.clone()).or_insert(record);
        Ok(())
    }
}
