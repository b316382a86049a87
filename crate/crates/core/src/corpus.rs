//! Grounding-annotated conversations.
//!
//! A conversation pairs an information seeker with a provider. Seeker turns
//! may carry a grounding act; explicit and implicit acts additionally carry
//! the cumulative grounded knowledge, which must be a subset of the
//! conversation's system knowledge.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::kg::{flatten, FlattenedKnowledge, KnowledgeGraph, Primitive};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Geography,
    History,
    Media,
    Nutrition,
    Sports,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Seeker,
    Provider,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::Seeker => "seeker",
            Speaker::Provider => "provider",
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grounding act of a response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundingAct {
    /// Overt acknowledgment ("okay, thanks").
    Explicit,
    /// Moves on, tacitly accepting what was said.
    Implicit,
    /// Asks for more information; grounds nothing.
    Clarification,
}

impl GroundingAct {
    pub const ALL: [GroundingAct; 3] =
        [GroundingAct::Explicit, GroundingAct::Implicit, GroundingAct::Clarification];

    pub fn as_str(self) -> &'static str {
        match self {
            GroundingAct::Explicit => "explicit",
            GroundingAct::Implicit => "implicit",
            GroundingAct::Clarification => "clarification",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn grounds_knowledge(self) -> bool {
        !matches!(self, GroundingAct::Clarification)
    }
}

impl fmt::Display for GroundingAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for GroundingAct {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroundingAct::ALL
            .into_iter()
            .find(|act| act.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownLabel(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown grounding act {0:?}")]
pub struct UnknownLabel(pub String);

#[derive(Debug, Clone)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    pub grounding_act: Option<GroundingAct>,
    pub grounded_knowledge: Option<KnowledgeGraph>,
}

impl Turn {
    pub fn new(index: usize, speaker: Speaker, text: impl Into<String>) -> Self {
        Turn { index, speaker, text: text.into(), grounding_act: None, grounded_knowledge: None }
    }

    pub fn with_act(mut self, act: GroundingAct) -> Self {
        self.grounding_act = Some(act);
        self
    }

    pub fn with_knowledge(mut self, graph: KnowledgeGraph) -> Self {
        self.grounded_knowledge = Some(graph);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Conversation {
    pub id: String,
    pub domain: Domain,
    pub system_knowledge: KnowledgeGraph,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    EmptySystemKnowledge,
    NonContiguousIndex { expected: usize, found: usize },
    KnowledgeWithoutAct,
    KnowledgeOnClarification,
    NotSubsetOfSystem { properties: Vec<String>, pairs: Vec<(String, Primitive)> },
    DuplicateConversationId,
}

/// A hard corpus invariant break, located by conversation and turn.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct InvariantViolation {
    pub conversation: String,
    pub turn: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conversation {:?}", self.conversation)?;
        if let Some(turn) = self.turn {
            write!(f, ", turn {turn}")?;
        }
        f.write_str(": ")?;
        match &self.kind {
            ViolationKind::EmptySystemKnowledge => f.write_str("system knowledge is empty"),
            ViolationKind::NonContiguousIndex { expected, found } => {
                write!(f, "turn index {found} where {expected} was expected")
            }
            ViolationKind::KnowledgeWithoutAct => {
                f.write_str("grounded knowledge on a turn without grounding act")
            }
            ViolationKind::KnowledgeOnClarification => {
                f.write_str("grounded knowledge on a clarification turn")
            }
            ViolationKind::NotSubsetOfSystem { properties, pairs } => {
                f.write_str("grounded knowledge is not a subset of system knowledge")?;
                if !properties.is_empty() {
                    write!(f, "; unknown properties {properties:?}")?;
                }
                if !pairs.is_empty() {
                    f.write_str("; unknown values ")?;
                    for (i, (k, v)) in pairs.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{k}={v}")?;
                    }
                }
                Ok(())
            }
            ViolationKind::DuplicateConversationId => f.write_str("duplicate conversation id"),
        }
    }
}

impl Conversation {
    /// Every structural invariant break in this conversation, in turn order.
    pub fn violations(&self) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        let at = |turn: Option<usize>, kind| InvariantViolation {
            conversation: self.id.clone(),
            turn,
            kind,
        };
        if self.system_knowledge.is_empty() {
            out.push(at(None, ViolationKind::EmptySystemKnowledge));
        }
        let system = flatten(&self.system_knowledge);
        for (expected, turn) in self.turns.iter().enumerate() {
            if turn.index != expected {
                out.push(at(
                    Some(turn.index),
                    ViolationKind::NonContiguousIndex { expected, found: turn.index },
                ));
            }
            let Some(graph) = &turn.grounded_knowledge else { continue };
            match turn.grounding_act {
                None => out.push(at(Some(turn.index), ViolationKind::KnowledgeWithoutAct)),
                Some(GroundingAct::Clarification) => {
                    out.push(at(Some(turn.index), ViolationKind::KnowledgeOnClarification))
                }
                Some(_) => {}
            }
            let grounded = flatten(graph);
            if !grounded.is_subset_of(&system) {
                out.push(at(
                    Some(turn.index),
                    ViolationKind::NotSubsetOfSystem {
                        properties: grounded.properties.difference(&system.properties).cloned().collect(),
                        pairs: grounded.pairs.difference(&system.pairs).cloned().collect(),
                    },
                ));
            }
        }
        out
    }

    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        match self.violations().into_iter().next() {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }

    pub fn turn(&self, index: usize) -> Option<&Turn> {
        self.turns.get(index)
    }
}

/// A set of conversations ordered by id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    conversations: Vec<Conversation>,
}

impl Corpus {
    /// Builds a corpus, checking every invariant; the first break aborts.
    pub fn new(conversations: Vec<Conversation>) -> Result<Self, InvariantViolation> {
        let corpus = Self::new_unchecked(conversations);
        match validate_corpus(&corpus).errors.into_iter().next() {
            Some(v) => Err(v),
            None => Ok(corpus),
        }
    }

    /// Builds a corpus without checks, for reporting on broken input.
    pub fn new_unchecked(mut conversations: Vec<Conversation>) -> Self {
        conversations.sort_by(|a, b| a.id.cmp(&b.id));
        Corpus { conversations }
    }

    pub fn conversations(&self) -> &[Conversation] {
        &self.conversations
    }

    pub fn conversation(&self, id: &str) -> Option<&Conversation> {
        self.conversations
            .binary_search_by(|c| c.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.conversations[i])
    }

    pub fn len(&self) -> usize {
        self.conversations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conversations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WarningKind {
    /// A labeled turn's grounding drops knowledge grounded at `previous_turn`.
    NotCumulative {
        previous_turn: usize,
        dropped_properties: Vec<String>,
        dropped_pairs: Vec<(String, Primitive)>,
    },
    ActOnProviderTurn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationWarning {
    pub conversation: String,
    pub turn: usize,
    pub kind: WarningKind,
}

impl ValidationWarning {
    /// Short code used in reports: `w1` cumulativity, `w2` provider label.
    pub fn code(&self) -> &'static str {
        match self.kind {
            WarningKind::NotCumulative { .. } => "w1",
            WarningKind::ActOnProviderTurn => "w2",
        }
    }
}

impl fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conversation {:?}, turn {}: ", self.conversation, self.turn)?;
        match &self.kind {
            WarningKind::NotCumulative { previous_turn, dropped_properties, dropped_pairs } => write!(
                f,
                "grounding drops {} properties and {} values grounded at turn {previous_turn}",
                dropped_properties.len(),
                dropped_pairs.len()
            ),
            WarningKind::ActOnProviderTurn => f.write_str("grounding act on a provider turn"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<InvariantViolation>,
    pub warnings: Vec<ValidationWarning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut report = ValidationReport::default();
    for pair in corpus.conversations.windows(2) {
        if pair[0].id == pair[1].id {
            report.errors.push(InvariantViolation {
                conversation: pair[1].id.clone(),
                turn: None,
                kind: ViolationKind::DuplicateConversationId,
            });
        }
    }
    for conv in &corpus.conversations {
        report.errors.extend(conv.violations());
        let mut previous: Option<(usize, FlattenedKnowledge)> = None;
        for turn in &conv.turns {
            if turn.grounding_act.is_some() && turn.speaker == Speaker::Provider {
                report.warnings.push(ValidationWarning {
                    conversation: conv.id.clone(),
                    turn: turn.index,
                    kind: WarningKind::ActOnProviderTurn,
                });
            }
            let Some(graph) = &turn.grounded_knowledge else { continue };
            let current = flatten(graph);
            if let Some((previous_turn, before)) = &previous {
                if !before.is_subset_of(&current) {
                    report.warnings.push(ValidationWarning {
                        conversation: conv.id.clone(),
                        turn: turn.index,
                        kind: WarningKind::NotCumulative {
                            previous_turn: *previous_turn,
                            dropped_properties: before
                                .properties
                                .difference(&current.properties)
                                .cloned()
                                .collect(),
                            dropped_pairs: before.pairs.difference(&current.pairs).cloned().collect(),
                        },
                    });
                }
            }
            previous = Some((turn.index, current));
        }
    }
    report
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ActCounts {
    pub explicit: usize,
    pub implicit: usize,
    pub clarification: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub conversations: usize,
    pub turns: usize,
    pub act_labels: ActCounts,
    pub grounded_annotations: usize,
}

impl CorpusStats {
    pub fn of(corpus: &Corpus) -> Self {
        let mut stats = CorpusStats { conversations: corpus.len(), ..Default::default() };
        for turn in corpus.conversations.iter().flat_map(|c| &c.turns) {
            stats.turns += 1;
            if let Some(act) = turn.grounding_act {
                let slot = match act {
                    GroundingAct::Explicit => &mut stats.act_labels.explicit,
                    GroundingAct::Implicit => &mut stats.act_labels.implicit,
                    GroundingAct::Clarification => &mut stats.act_labels.clarification,
                };
                *slot += 1;
                stats.act_labels.total += 1;
            }
            if turn.grounded_knowledge.is_some() {
                stats.grounded_annotations += 1;
            }
        }
        stats
    }
}

/// The two evaluation tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Grounding-act classification.
    Acts,
    /// Grounded-knowledge identification.
    Knowledge,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Acts => "acts",
            Task::Knowledge => "knowledge",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled turn to be predicted.
#[derive(Debug, Clone, Copy)]
pub struct Instance<'a> {
    pub task: Task,
    pub conversation: &'a Conversation,
    pub turn: &'a Turn,
}

impl<'a> Instance<'a> {
    pub fn conversation_id(&self) -> &'a str {
        &self.conversation.id
    }

    pub fn turn_index(&self) -> usize {
        self.turn.index
    }

    pub fn gold_act(&self) -> Option<GroundingAct> {
        self.turn.grounding_act
    }

    pub fn gold_knowledge(&self) -> Option<&'a KnowledgeGraph> {
        self.turn.grounded_knowledge.as_ref()
    }

    pub fn system_knowledge(&self) -> &'a KnowledgeGraph {
        &self.conversation.system_knowledge
    }
}

/// Instances for `task`, ordered by (conversation id, turn index).
pub fn grounding_instances(corpus: &Corpus, task: Task) -> Vec<Instance<'_>> {
    corpus
        .conversations
        .iter()
        .flat_map(|conversation| {
            conversation.turns.iter().filter_map(move |turn| {
                let selected = match task {
                    Task::Acts => turn.grounding_act.is_some(),
                    Task::Knowledge => {
                        turn.grounded_knowledge.is_some()
                            && turn.grounding_act.is_some_and(GroundingAct::grounds_knowledge)
                    }
                };
                selected.then_some(Instance { task, conversation, turn })
            })
        })
        .collect()
}
