//! Scoring a manifest against its corpus. Pure: no model is queried and
//! the same inputs always give byte-identical reports.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ground_eval_core::corpus::grounding_instances;
use ground_eval_core::eval_acts::{act_metrics, ActMetrics, ConfusionMatrix};
use ground_eval_core::eval_knowledge::{
    aggregate_with, assess_prediction_with, Denominator, IssueFrequencies, KnowledgeAssessment,
};
use ground_eval_core::extract::{extract_act, ExtractOptions};
use ground_eval_core::kg::serialize_graph;
use ground_eval_core::prompts::{Shot, Window, WindowReading};
use ground_eval_core::{Corpus, Task};
use serde::{Deserialize, Serialize};

use crate::manifest::{RunManifest, TOOLKIT_VERSION};
use crate::report;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvaluateOptions {
    pub extract: ExtractOptions,
    pub denominator: Denominator,
    /// Score the completed part of an aborted run.
    pub allow_partial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifestCorpusMismatch {
    #[error("unknown conversation {0:?}")]
    UnknownConversation(String),
    #[error("{conversation_id} turn {turn_index} is not a {task} instance")]
    NotAnInstance { conversation_id: String, turn_index: usize, task: Task },
    #[error("{conversation_id} turn {turn_index}: gold in manifest differs from corpus")]
    GoldMismatch { conversation_id: String, turn_index: usize },
    #[error("{conversation_id} turn {turn_index} appears more than once")]
    Duplicate { conversation_id: String, turn_index: usize },
    #[error("corpus has {expected} {task} instances, manifest has {found}")]
    InstanceCount { task: Task, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("manifest does not match corpus: {0}")]
    Mismatch(#[from] ManifestCorpusMismatch),
    #[error("manifest is from an aborted run ({0}); pass --allow-partial to score it")]
    Incomplete(String),
    #[error("manifest has no instances")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActReport {
    pub confusion: ConfusionMatrix,
    pub metrics: ActMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeReport {
    pub frequencies: IssueFrequencies,
}

/// Serialized summary of one evaluated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub toolkit_version: String,
    pub task: Task,
    pub model_id: String,
    pub shot: Shot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    pub window_reading: WindowReading,
    pub manifest_digest: String,
    pub complete: bool,
    pub instances: usize,
    pub extraction_failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acts: Option<ActReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<KnowledgeReport>,
}

impl RunReport {
    /// `<model> <shot>` plus `n=<window>` for act runs.
    pub fn label(&self) -> String {
        match self.window {
            Some(w) => format!("{} {} n={w}", self.model_id, self.shot),
            None => format!("{} {}", self.model_id, self.shot),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssessmentRecord {
    pub conversation_id: String,
    pub turn_index: usize,
    #[serde(flatten)]
    pub assessment: KnowledgeAssessment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: RunReport,
    /// Knowledge task only, in instance order.
    pub assessments: Vec<AssessmentRecord>,
}

fn check_against_corpus(manifest: &RunManifest, corpus: &Corpus) -> Result<(), ManifestCorpusMismatch> {
    let task = manifest.header.task;
    let mut seen = BTreeSet::new();
    for r in &manifest.records {
        let coords = || (r.conversation_id.clone(), r.turn_index);
        let conversation = corpus
            .conversation(&r.conversation_id)
            .ok_or_else(|| ManifestCorpusMismatch::UnknownConversation(r.conversation_id.clone()))?;
        let not_instance = || {
            let (conversation_id, turn_index) = coords();
            ManifestCorpusMismatch::NotAnInstance { conversation_id, turn_index, task }
        };
        let turn = conversation.turn(r.turn_index).ok_or_else(not_instance)?;
        let gold_matches = match task {
            Task::Acts => {
                let act = turn.grounding_act.ok_or_else(not_instance)?;
                serde_json::from_str::<String>(&r.gold).is_ok_and(|g| g == act.as_str())
            }
            Task::Knowledge => {
                let graph = turn
                    .grounded_knowledge
                    .as_ref()
                    .filter(|_| turn.grounding_act.is_some_and(|a| a.grounds_knowledge()))
                    .ok_or_else(not_instance)?;
                r.gold == serialize_graph(graph)
            }
        };
        if !gold_matches {
            let (conversation_id, turn_index) = coords();
            return Err(ManifestCorpusMismatch::GoldMismatch { conversation_id, turn_index });
        }
        if !seen.insert(coords()) {
            let (conversation_id, turn_index) = coords();
            return Err(ManifestCorpusMismatch::Duplicate { conversation_id, turn_index });
        }
    }
    if manifest.header.complete {
        let expected = grounding_instances(corpus, task).len();
        if expected != manifest.records.len() {
            return Err(ManifestCorpusMismatch::InstanceCount { task, expected, found: manifest.records.len() });
        }
    }
    Ok(())
}

pub fn evaluate(manifest: &RunManifest, corpus: &Corpus, opts: EvaluateOptions) -> Result<Evaluation, EvalError> {
    let header = &manifest.header;
    if !header.complete && !opts.allow_partial {
        return Err(EvalError::Incomplete(header.error.clone().unwrap_or_else(|| "unknown error".into())));
    }
    check_against_corpus(manifest, corpus)?;
    if manifest.records.is_empty() {
        return Err(EvalError::Empty);
    }

    let mut report = RunReport {
        toolkit_version: TOOLKIT_VERSION.into(),
        task: header.task,
        model_id: header.config.model_id.clone(),
        shot: header.config.shot,
        window: header.config.window,
        window_reading: header.config.window_reading,
        manifest_digest: manifest.content_digest(),
        complete: header.complete,
        instances: manifest.records.len(),
        extraction_failures: 0,
        acts: None,
        knowledge: None,
    };
    let mut assessments = Vec::new();
    match header.task {
        Task::Acts => {
            let mut confusion = ConfusionMatrix::default();
            for r in &manifest.records {
                let conversation = corpus.conversation(&r.conversation_id).expect("checked above");
                let gold = conversation.turn(r.turn_index).and_then(|t| t.grounding_act).expect("checked above");
                let predicted = extract_act(&r.raw_output).ok();
                report.extraction_failures += usize::from(predicted.is_none());
                confusion.add(gold, predicted);
            }
            let metrics = act_metrics(&confusion).map_err(|_| EvalError::Empty)?;
            report.acts = Some(ActReport { confusion, metrics });
        }
        Task::Knowledge => {
            for r in &manifest.records {
                let conversation = corpus.conversation(&r.conversation_id).expect("checked above");
                let gold = conversation.turn(r.turn_index).and_then(|t| t.grounded_knowledge.as_ref()).expect("checked above");
                let assessment =
                    assess_prediction_with(&r.raw_output, gold, &conversation.system_knowledge, opts.extract);
                report.extraction_failures += usize::from(assessment.detail.failure.is_some());
                assessments.push(AssessmentRecord {
                    conversation_id: r.conversation_id.clone(),
                    turn_index: r.turn_index,
                    assessment,
                });
            }
            let plain: Vec<_> = assessments.iter().map(|a| a.assessment.clone()).collect();
            let frequencies = aggregate_with(&plain, opts.denominator).map_err(|_| EvalError::Empty)?;
            report.knowledge = Some(KnowledgeReport { frequencies });
        }
    }
    Ok(Evaluation { report, assessments })
}

/// Writes `<stem>.report.{json,txt,csv}` and, for the knowledge task,
/// `<stem>.assessments.jsonl` into `dir`.
pub fn write_reports(evaluation: &Evaluation, dir: &Path, stem: &str) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![
        (dir.join(format!("{stem}.report.json")), report::render_json(&evaluation.report)),
        (dir.join(format!("{stem}.report.txt")), report::render_text(&evaluation.report)),
        (dir.join(format!("{stem}.report.csv")), report::render_csv(&evaluation.report)),
    ];
    if evaluation.report.task == Task::Knowledge {
        let mut lines = String::new();
        for a in &evaluation.assessments {
            lines.push_str(&serde_json::to_string(a).expect("assessment serializes"));
            lines.push('\n');
        }
        files.push((dir.join(format!("{stem}.assessments.jsonl")), lines));
    }
    for (path, content) in &files {
        fs::write(path, content)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
