//! Data model, prompt construction, output extraction and scoring for
//! evaluating conversational grounding with language models.
//!
//! Everything here is pure and allocation-only; file formats, HTTP and the
//! command line live in the `ground-eval` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chat;
pub mod corpus;
pub mod eval_acts;
pub mod eval_knowledge;
pub mod extract;
pub mod json;
pub mod kg;
pub mod prompts;

pub use chat::{digest, ChatMessage, ChatRequest, ChatResponse, Role};
pub use corpus::{Conversation, Corpus, Domain, GroundingAct, Speaker, Task, Turn};
pub use eval_acts::{act_metrics, confusion, ActMetrics, ConfusionMatrix};
pub use eval_knowledge::{aggregate, assess_prediction, Issue, IssueFrequencies, KnowledgeAssessment, Tier};
pub use extract::{extract_act, extract_jsonld, ExtractionFailure};
pub use kg::{canonicalize, flatten, graphs_identical, parse_graph, serialize_graph, KnowledgeGraph};
