//! Batch execution: one prompt per grounding instance, dispatched through
//! the gateway with bounded parallelism, collected in instance order.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use ground_eval_core::corpus::grounding_instances;
use ground_eval_core::extract::ExtractOptions;
use ground_eval_core::kg::serialize_graph;
use ground_eval_core::prompts::{build_prompt, PromptError, PromptMode};
use ground_eval_core::{digest, ChatRequest, Corpus, Task};

use crate::config::{BackendKind, ConfigError, RunConfig};
use crate::gateway::{
    Gateway, GatewayError, HttpBackend, HttpOptions, ReplayBackend, ResponseCache, Rule, Script, ScriptedBackend,
};
use crate::manifest::{
    extract_kind, ExtractionRecord, InstanceRecord, ManifestHeader, RunManifest, Sidecar, TOOLKIT_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{conversation_id} turn {turn_index}: {error}")]
    Prompt { conversation_id: String, turn_index: usize, error: PromptError },
    #[error("{conversation_id} turn {turn_index}: {error}")]
    Gateway { conversation_id: String, turn_index: usize, error: GatewayError },
    #[error("backend setup: {0}")]
    Backend(String),
}

/// A failed run and the manifest of everything that completed before it.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: RunError,
    pub partial: Box<RunManifest>,
}

/// A fully built request for one instance.
#[derive(Debug, Clone)]
pub struct PreparedRequest {
    pub conversation_id: String,
    pub turn_index: usize,
    pub request: ChatRequest,
    pub gold: String,
}

fn mode(cfg: &RunConfig) -> PromptMode {
    match cfg.task {
        Task::Acts => PromptMode::acts(cfg.shot, cfg.window.unwrap_or(ground_eval_core::prompts::Window::All)),
        Task::Knowledge => PromptMode::knowledge(cfg.shot),
    }
}

/// Requests for every instance of `cfg.task`, in (conversation, turn) order.
pub fn prepare_requests(cfg: &RunConfig, corpus: &Corpus) -> Result<Vec<PreparedRequest>, RunError> {
    let mode = mode(cfg);
    grounding_instances(corpus, cfg.task)
        .into_iter()
        .map(|inst| {
            let coords = || (inst.conversation_id().to_owned(), inst.turn_index());
            let messages = build_prompt(inst.conversation, inst.turn_index(), mode, cfg.window_reading).map_err(
                |source| {
                    let (conversation_id, turn_index) = coords();
                    RunError::Prompt { conversation_id, turn_index, error: source }
                },
            )?;
            let request = ChatRequest {
                model_id: cfg.model_id.clone(),
                messages,
                temperature: ground_eval_core::chat::DEFAULT_TEMPERATURE,
                seed: ground_eval_core::chat::DEFAULT_SEED,
                max_tokens: ground_eval_core::chat::max_tokens_for(cfg.task),
            };
            let gold = match cfg.task {
                Task::Acts => format!("\"{}\"", inst.gold_act().expect("act instance is labeled")),
                Task::Knowledge => serialize_graph(inst.gold_knowledge().expect("knowledge instance has a graph")),
            };
            let (conversation_id, turn_index) = coords();
            Ok(PreparedRequest { conversation_id, turn_index, request, gold })
        })
        .collect()
}

/// A script answering every instance of `cfg` with its gold annotation,
/// phrased like the few-shot exemplars.
pub fn gold_script(cfg: &RunConfig, corpus: &Corpus) -> Result<Script, RunError> {
    let rules = prepare_requests(cfg, corpus)?
        .into_iter()
        .map(|p| {
            let response = match cfg.task {
                Task::Acts => format!("Output Label: {}", p.gold.trim_matches('"')),
                Task::Knowledge => format!("Output JSON-LD: {}", p.gold),
            };
            Rule { digest: Some(digest(&p.request)), pattern: None, response }
        })
        .collect();
    Ok(Script { rules, fallback: None })
}

/// Builds the gateway described by `cfg`.
pub fn build_gateway(cfg: &RunConfig, http: HttpOptions) -> Result<Gateway, RunError> {
    cfg.validate()?;
    let cache = match (cfg.backend, &cfg.cache) {
        (BackendKind::Replay, Some(path)) => {
            Some(ResponseCache::open_existing(path).map_err(|e| RunError::Backend(e.to_string()))?)
        }
        (_, Some(path)) => Some(ResponseCache::open(path).map_err(|e| RunError::Backend(e.to_string()))?),
        (_, None) => None,
    };
    let backend: Box<dyn crate::gateway::Backend> = match cfg.backend {
        BackendKind::Replay => Box::new(ReplayBackend),
        BackendKind::Scripted => {
            let path = cfg.script.as_deref().ok_or(ConfigError::MissingScript)?;
            Box::new(ScriptedBackend::from_file(path).map_err(RunError::Backend)?)
        }
        BackendKind::Http => {
            let endpoint = cfg.endpoint.clone().ok_or(ConfigError::MissingEndpoint)?;
            Box::new(HttpBackend::from_env(endpoint, http).map_err(|e| RunError::Backend(e.to_string()))?)
        }
    };
    Ok(Gateway::new(backend, cache))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs every instance through `gateway`.
///
/// Workers pull instances in order, so on failure every instance before the
/// first failing one has been attempted and the reported error is the
/// earliest in instance order.
pub fn run_batch(cfg: &RunConfig, corpus: &Corpus, gateway: &Gateway) -> Result<RunManifest, RunFailure> {
    let started_at = now();
    let empty = |error: RunError| RunFailure {
        partial: Box::new(manifest(cfg, Vec::new(), started_at.clone(), gateway, false, Some(error.to_string()))),
        error,
    };
    if let Err(e) = cfg.validate() {
        return Err(empty(e.into()));
    }
    let prepared = prepare_requests(cfg, corpus).map_err(empty)?;

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<String, GatewayError>>>> =
        Mutex::new((0..prepared.len()).map(|_| None).collect());
    let workers = cfg.parallelism.clamp(1, prepared.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                while !abort.load(Ordering::SeqCst) {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(p) = prepared.get(i) else { break };
                    let result = gateway.complete(&p.request).map(|r| r.content);
                    if result.is_err() {
                        abort.store(true, Ordering::SeqCst);
                    }
                    slots.lock().expect("result slots")[i] = Some(result);
                }
            });
        }
    });

    let kind = extract_kind(cfg.task);
    let mut records = Vec::with_capacity(prepared.len());
    let mut first_error = None;
    for (p, slot) in prepared.iter().zip(slots.into_inner().expect("result slots")) {
        match slot {
            Some(Ok(raw)) => records.push(InstanceRecord {
                conversation_id: p.conversation_id.clone(),
                turn_index: p.turn_index,
                request_digest: digest(&p.request),
                extracted: ExtractionRecord::of(kind, &raw, ExtractOptions::default()),
                raw_output: raw,
                gold: p.gold.clone(),
            }),
            Some(Err(error)) if first_error.is_none() => {
                first_error = Some(RunError::Gateway {
                    conversation_id: p.conversation_id.clone(),
                    turn_index: p.turn_index,
                    error,
                });
            }
            _ => {}
        }
    }
    match first_error {
        None => Ok(manifest(cfg, records, started_at, gateway, true, None)),
        Some(error) => {
            let partial = Box::new(manifest(cfg, records, started_at, gateway, false, Some(error.to_string())));
            Err(RunFailure { error, partial })
        }
    }
}

fn manifest(
    cfg: &RunConfig,
    records: Vec<InstanceRecord>,
    started_at: String,
    gateway: &Gateway,
    complete: bool,
    error: Option<String>,
) -> RunManifest {
    RunManifest {
        header: ManifestHeader {
            toolkit_version: TOOLKIT_VERSION.into(),
            task: cfg.task,
            config: cfg.clone(),
            instance_count: records.len(),
            complete,
            error,
            sidecar: Sidecar {
                started_at,
                finished_at: now(),
                backend_calls: gateway.backend_calls(),
                cache_hits: gateway.cache_hits(),
            },
        },
        records,
    }
}
