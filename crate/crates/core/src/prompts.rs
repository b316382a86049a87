//! Chat prompts for both tasks, zero- and few-shot, with dialogue windowing.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chat::{ChatMessage, Role};
use crate::corpus::{Conversation, Task, Turn};
use crate::kg::{serialize_graph, KnowledgeGraph};

pub mod templates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shot {
    Zero,
    Few,
}

impl Shot {
    pub fn as_str(self) -> &'static str {
        match self {
            Shot::Zero => "zero",
            Shot::Few => "few",
        }
    }
}

impl fmt::Display for Shot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Shot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(Shot::Zero),
            "few" => Ok(Shot::Few),
            other => Err(alloc::format!("unknown shot mode {other:?} (expected zero|few)")),
        }
    }
}

/// How many utterances before the target go into an act prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    Preceding(usize),
    All,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Preceding(n) => write!(f, "{n}"),
            Window::All => f.write_str("all"),
        }
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(Window::All);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Window::Preceding(n)),
            _ => Err(alloc::format!("invalid window {s:?} (expected a positive integer or all)")),
        }
    }
}

impl Serialize for Window {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Reading of the window size `n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowReading {
    /// `n` predecessors plus the target: n=1 gives two utterances.
    #[default]
    PrecedingPlusTarget,
    /// `n` utterances in total, ending at the target: n=1 gives the target only.
    TargetInclusive,
}

/// Task, shot mode and (act task only) window size of a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptMode {
    task: Task,
    shot: Shot,
    window: Option<Window>,
}

impl PromptMode {
    pub fn acts(shot: Shot, window: Window) -> Self {
        PromptMode { task: Task::Acts, shot, window: Some(window) }
    }

    /// Knowledge identification always sees the full dialogue prefix.
    pub fn knowledge(shot: Shot) -> Self {
        PromptMode { task: Task::Knowledge, shot, window: None }
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn shot(&self) -> Shot {
        self.shot
    }

    pub fn window(&self) -> Option<Window> {
        self.window
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("turn {index} out of range (conversation has {len} turns)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("turn {index} carries no grounding act")]
    UnlabeledTurn { index: usize },
    #[error("turn {index} carries no grounded knowledge")]
    NoGroundedKnowledge { index: usize },
    #[error("dialogue window is empty")]
    EmptyWindow,
}

/// The target turn and its predecessors, as selected by `window`.
pub fn dialogue_window(
    conversation: &Conversation,
    turn_index: usize,
    window: Window,
    reading: WindowReading,
) -> Result<&[Turn], PromptError> {
    let len = conversation.turns.len();
    let target = conversation
        .turns
        .get(turn_index)
        .ok_or(PromptError::IndexOutOfRange { index: turn_index, len })?;
    if target.grounding_act.is_none() {
        return Err(PromptError::UnlabeledTurn { index: turn_index });
    }
    let start = match (window, reading) {
        (Window::All, _) => 0,
        (Window::Preceding(n), WindowReading::PrecedingPlusTarget) => turn_index.saturating_sub(n),
        (Window::Preceding(n), WindowReading::TargetInclusive) => {
            (turn_index + 1).saturating_sub(n.max(1))
        }
    };
    Ok(&conversation.turns[start..=turn_index])
}

/// `Input Dialogue:` followed by one `<speaker>: <text>` line per turn.
pub fn render_dialogue(window: &[Turn]) -> String {
    let mut out = String::from("Input Dialogue:");
    for turn in window {
        out.push('\n');
        out.push_str(turn.speaker.as_str());
        out.push_str(": ");
        out.push_str(&turn.text);
    }
    out
}

fn with_exemplars(system: &str, exemplars: &[(&str, &str)], shot: Shot) -> Vec<ChatMessage> {
    let mut messages = Vec::with_capacity(2 + 2 * exemplars.len());
    messages.push(ChatMessage::system(system));
    if shot == Shot::Few {
        for (user, assistant) in exemplars {
            messages.push(ChatMessage::user(*user));
            messages.push(ChatMessage::assistant(*assistant));
        }
    }
    messages
}

pub fn build_act_prompt(window: &[Turn], shot: Shot) -> Result<Vec<ChatMessage>, PromptError> {
    if window.is_empty() {
        return Err(PromptError::EmptyWindow);
    }
    let mut messages = with_exemplars(templates::ACT_SYSTEM, &templates::ACT_EXEMPLARS, shot);
    messages.push(ChatMessage::user(render_dialogue(window)));
    Ok(messages)
}

/// `System Knowledge: <graph>` on the first line, then the rendered dialogue.
pub fn knowledge_user_message(prefix: &[Turn], system_knowledge: &KnowledgeGraph) -> String {
    let mut out = String::from("System Knowledge: ");
    out.push_str(&serialize_graph(system_knowledge));
    out.push('\n');
    out.push_str(&render_dialogue(prefix));
    out
}

pub fn build_ki_prompt(
    prefix: &[Turn],
    system_knowledge: &KnowledgeGraph,
    shot: Shot,
) -> Result<Vec<ChatMessage>, PromptError> {
    if prefix.is_empty() {
        return Err(PromptError::EmptyWindow);
    }
    let mut messages =
        with_exemplars(templates::KNOWLEDGE_SYSTEM, &templates::KNOWLEDGE_EXEMPLARS, shot);
    messages.push(ChatMessage::user(knowledge_user_message(prefix, system_knowledge)));
    Ok(messages)
}

/// Full prompt for the labeled turn `turn_index` of `conversation`.
pub fn build_prompt(
    conversation: &Conversation,
    turn_index: usize,
    mode: PromptMode,
    reading: WindowReading,
) -> Result<Vec<ChatMessage>, PromptError> {
    match mode.task {
        Task::Acts => {
            let window = dialogue_window(
                conversation,
                turn_index,
                mode.window.unwrap_or(Window::All),
                reading,
            )?;
            build_act_prompt(window, mode.shot)
        }
        Task::Knowledge => {
            let prefix = dialogue_window(conversation, turn_index, Window::All, reading)?;
            if prefix[turn_index].grounded_knowledge.is_none() {
                return Err(PromptError::NoGroundedKnowledge { index: turn_index });
            }
            build_ki_prompt(prefix, &conversation.system_knowledge, mode.shot)
        }
    }
}

/// The fixed part of a prompt (system instruction plus exemplars).
pub fn template_messages(task: Task, shot: Shot) -> Vec<ChatMessage> {
    match task {
        Task::Acts => with_exemplars(templates::ACT_SYSTEM, &templates::ACT_EXEMPLARS, shot),
        Task::Knowledge => {
            with_exemplars(templates::KNOWLEDGE_SYSTEM, &templates::KNOWLEDGE_EXEMPLARS, shot)
        }
    }
}

/// Plain-text transcript: `SYSTEM: `, `USER: `, `ASSISTANT: ` blocks
/// separated by a blank line, ending in a newline.
pub fn transcript(messages: &[ChatMessage]) -> String {
    let mut out = String::new();
    for (i, message) in messages.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(match message.role {
            Role::System => "SYSTEM: ",
            Role::User => "USER: ",
            Role::Assistant => "ASSISTANT: ",
        });
        out.push_str(&message.content);
        out.push('\n');
    }
    out
}
