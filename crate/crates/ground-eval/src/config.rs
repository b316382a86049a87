//! Run configuration and the optional JSON config file.

use std::fs;
use std::path::{Path, PathBuf};

use ground_eval_core::prompts::{Shot, Window, WindowReading};
use ground_eval_core::Task;
use serde::{Deserialize, Serialize};

use crate::gateway::DEFAULT_PARALLELISM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Replay,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("the acts task needs a window (--n 1|3|all)")]
    MissingWindow,
    #[error("a window only applies to the acts task")]
    WindowOnKnowledgeTask,
    #[error("model id is empty")]
    EmptyModel,
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
    #[error("the http backend needs an endpoint")]
    MissingEndpoint,
    #[error("the scripted backend needs a script file")]
    MissingScript,
    #[error("the replay backend needs an existing cache file")]
    MissingCache,
    #[error("config file {path}: {message}")]
    File { path: PathBuf, message: String },
}

/// Everything that determines one batch run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub task: Task,
    pub shot: Shot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default)]
    pub window_reading: WindowReading,
    pub model_id: String,
    pub backend: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub parallelism: usize,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, task: Task, shot: Shot, model_id: impl Into<String>, backend: BackendKind) -> Self {
        RunConfig {
            corpus: corpus.into(),
            task,
            shot,
            window: (task == Task::Acts).then_some(Window::All),
            window_reading: WindowReading::default(),
            model_id: model_id.into(),
            backend,
            endpoint: None,
            script: None,
            cache: None,
            output_dir: PathBuf::from("."),
            parallelism: DEFAULT_PARALLELISM,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match (self.task, self.window) {
            (Task::Acts, None) => return Err(ConfigError::MissingWindow),
            (Task::Knowledge, Some(_)) => return Err(ConfigError::WindowOnKnowledgeTask),
            _ => {}
        }
        if self.model_id.trim().is_empty() {
            return Err(ConfigError::EmptyModel);
        }
        if self.parallelism == 0 {
            return Err(ConfigError::ZeroParallelism);
        }
        match self.backend {
            BackendKind::Http if self.endpoint.is_none() => Err(ConfigError::MissingEndpoint),
            BackendKind::Scripted if self.script.is_none() => Err(ConfigError::MissingScript),
            BackendKind::Replay if !self.cache.as_deref().is_some_and(Path::is_file) => Err(ConfigError::MissingCache),
            _ => Ok(()),
        }
    }

    /// `<model>_<shot>_<n>` for acts, `<model>_<shot>_ki` for knowledge.
    pub fn run_stem(&self) -> String {
        let model: String = self
            .model_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.') { c } else { '-' })
            .collect();
        let last = match (self.task, self.window) {
            (Task::Acts, Some(w)) => w.to_string(),
            (Task::Acts, None) => "all".into(),
            (Task::Knowledge, _) => "ki".into(),
        };
        format!("{model}_{}_{last}", self.shot)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}{}", self.run_stem(), crate::manifest::EXTENSION))
    }
}

/// Defaults read from `--config`; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub model: Option<String>,
    pub backend: Option<BackendKind>,
    pub endpoint: Option<String>,
    pub script: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub window_reading: Option<WindowReading>,
    pub timeout_secs: Option<u64>,
    pub max_attempts: Option<u32>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let err = |message: String| ConfigError::File { path: path.into(), message };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }
}
