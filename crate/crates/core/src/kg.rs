//! JSON-LD knowledge graphs as used for system knowledge, gold grounding
//! annotations and model predictions.
//!
//! Graphs are handled as JSON trees: no RDF expansion, no `@context`
//! resolution. Two graphs are "identical" when their canonical forms match;
//! canonicalization sorts object keys, treats every array as a multiset,
//! reduces numbers to exact decimals and NFC-normalizes strings.
//!
//! `@context` arrays are therefore order-insensitive here, which diverges
//! from strict JSON-LD where context order matters.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use unicode_normalization::UnicodeNormalization;

use crate::json::{self, Decimal, JsonError, Layout, Map, SyntaxErrorKind, Value};

/// A parsed JSON-LD array of node objects.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: Vec<Map>,
    source_text: Option<String>,
}

impl KnowledgeGraph {
    pub fn new(nodes: Vec<Map>) -> Self {
        KnowledgeGraph { nodes, source_text: None }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[Map] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The text this graph was parsed from, if any.
    pub fn source_text(&self) -> Option<&str> {
        self.source_text.as_deref()
    }

    pub fn into_value(self) -> Value {
        Value::Array(self.nodes.into_iter().map(Value::Object).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    NotJson(SyntaxErrorKind),
    NotArray,
    ElementNotObject { index: usize },
    DuplicateKey { key: String },
}

/// Why a text is not a knowledge graph, and where the first fault sits.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at line {line}, column {column} (byte {offset})")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::NotJson(kind) => write!(f, "not JSON: {kind}"),
            ParseErrorKind::NotArray => f.write_str("top-level value is not an array"),
            ParseErrorKind::ElementNotObject { index } => {
                write!(f, "array element {index} is not an object")
            }
            ParseErrorKind::DuplicateKey { key } => write!(f, "duplicate key {key:?}"),
        }
    }
}

impl ParseError {
    fn at(text: &str, offset: usize, kind: ParseErrorKind) -> Self {
        let before = &text[..offset.min(text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError { kind, offset, line, column }
    }
}

/// Parses `text` as a JSON array whose elements are all objects.
pub fn parse_graph(text: &str) -> Result<KnowledgeGraph, ParseError> {
    let (value, offsets) = json::parse_with_element_offsets(text).map_err(|err| {
        let offset = err.offset();
        let kind = match err {
            JsonError::Syntax { kind, .. } => ParseErrorKind::NotJson(kind),
            JsonError::DuplicateKey { key, .. } => ParseErrorKind::DuplicateKey { key },
        };
        ParseError::at(text, offset, kind)
    })?;
    let Value::Array(items) = value else {
        let start = text.len() - text.trim_start().len();
        return Err(ParseError::at(text, start, ParseErrorKind::NotArray));
    };
    let mut nodes = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        match item {
            Value::Object(map) => nodes.push(map),
            _ => {
                return Err(ParseError::at(
                    text,
                    offsets[index],
                    ParseErrorKind::ElementNotObject { index },
                ))
            }
        }
    }
    Ok(KnowledgeGraph { nodes, source_text: Some(text.into()) })
}

/// JSON text of the graph in the spaced layout used by the prompt exemplars
/// (`", "` and `": "` separators), keeping key order and numeral spelling.
pub fn serialize_graph(graph: &KnowledgeGraph) -> String {
    let mut out = String::new();
    out.push('[');
    for (i, node) in graph.nodes.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_node(&mut out, node, Layout::Spaced);
    }
    out.push(']');
    out
}

/// Like [`serialize_graph`] without insignificant whitespace.
pub fn serialize_graph_compact(graph: &KnowledgeGraph) -> String {
    let mut out = String::new();
    out.push('[');
    for (i, node) in graph.nodes.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_node(&mut out, node, Layout::Compact);
    }
    out.push(']');
    out
}

fn write_node(out: &mut String, node: &Map, layout: Layout) {
    json::write_object(out, node, layout);
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Canonical form of a JSON value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonicalValue {
    Null,
    Bool(bool),
    Number(Decimal),
    String(String),
    /// Sorted; duplicates kept.
    Array(Vec<CanonicalValue>),
    /// Sorted by key.
    Object(Vec<(String, CanonicalValue)>),
}

impl CanonicalValue {
    pub fn from_value(value: &Value) -> Self {
        match value {
            Value::Null => CanonicalValue::Null,
            Value::Bool(b) => CanonicalValue::Bool(*b),
            Value::Number(n) => CanonicalValue::Number(n.decimal()),
            Value::String(s) => CanonicalValue::String(nfc(s)),
            Value::Array(items) => {
                let mut items: Vec<_> = items.iter().map(CanonicalValue::from_value).collect();
                items.sort();
                CanonicalValue::Array(items)
            }
            Value::Object(map) => CanonicalValue::Object(canonical_entries(map)),
        }
    }

    fn write(&self, out: &mut String) {
        use core::fmt::Write as _;
        match self {
            CanonicalValue::Null => out.push_str("null"),
            CanonicalValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            CanonicalValue::Number(d) => {
                let _ = write!(out, "{d}");
            }
            CanonicalValue::String(s) => json::write_string(out, s),
            CanonicalValue::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            CanonicalValue::Object(entries) => write_entries(out, entries),
        }
    }
}

fn canonical_entries(map: &Map) -> Vec<(String, CanonicalValue)> {
    let mut entries: Vec<_> = map
        .iter()
        .map(|(k, v)| (nfc(k), CanonicalValue::from_value(v)))
        .collect();
    entries.sort();
    entries
}

fn write_entries(out: &mut String, entries: &[(String, CanonicalValue)]) {
    out.push('{');
    for (i, (key, value)) in entries.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        json::write_string(out, key);
        out.push(':');
        value.write(out);
    }
    out.push('}');
}

/// Order-, spelling- and normalization-independent form of a graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalGraph {
    nodes: Vec<Vec<(String, CanonicalValue)>>,
}

impl CanonicalGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Canonical JSON text: sorted keys, no insignificant whitespace.
    pub fn to_json(&self) -> String {
        let mut out = String::from("[");
        for (i, node) in self.nodes.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_entries(&mut out, node);
        }
        out.push(']');
        out
    }

    /// Rebuilds a plain graph from the canonical form.
    pub fn to_graph(&self) -> KnowledgeGraph {
        // the canonical text is valid by construction
        parse_graph(&self.to_json()).unwrap_or_default()
    }
}

pub fn canonicalize(graph: &KnowledgeGraph) -> CanonicalGraph {
    let mut nodes: Vec<_> = graph.nodes.iter().map(canonical_entries).collect();
    nodes.sort();
    CanonicalGraph { nodes }
}

pub fn graphs_identical(a: &KnowledgeGraph, b: &KnowledgeGraph) -> bool {
    a.nodes.len() == b.nodes.len() && canonicalize(a) == canonicalize(b)
}

/// A primitive JSON value with canonical comparison semantics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Primitive {
    Null,
    Bool(bool),
    Number(Decimal),
    String(String),
}

impl fmt::Display for Primitive {
    /// JSON spelling of the value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Null => f.write_str("null"),
            Primitive::Bool(b) => write!(f, "{b}"),
            Primitive::Number(d) => write!(f, "{d}"),
            Primitive::String(s) => {
                let mut out = String::new();
                json::write_string(&mut out, s);
                f.write_str(&out)
            }
        }
    }
}

impl serde::Serialize for Primitive {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Primitive::Null => serializer.serialize_unit(),
            Primitive::Bool(b) => serializer.serialize_bool(*b),
            Primitive::String(s) => serializer.serialize_str(s),
            Primitive::Number(d) => {
                use alloc::string::ToString;
                if let Some(n) = d.to_i64() {
                    return serializer.serialize_i64(n);
                }
                let text = d.to_string();
                match text.parse::<f64>() {
                    // only when the float spells back to the exact same value
                    Ok(f) if f.is_finite() && Decimal::parse(&alloc::format!("{f}")).as_ref() == Some(d) => {
                        serializer.serialize_f64(f)
                    }
                    _ => serializer.serialize_str(&text),
                }
            }
        }
    }
}

/// The property and value universes of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct FlattenedKnowledge {
    /// Every key of every object at any depth, keywords included.
    pub properties: BTreeSet<String>,
    /// Every `(key, primitive)` occurrence; primitives inside an array are
    /// attributed to the key holding the array.
    pub pairs: BTreeSet<(String, Primitive)>,
}

impl FlattenedKnowledge {
    pub fn is_empty(&self) -> bool {
        self.properties.is_empty() && self.pairs.is_empty()
    }

    pub fn is_subset_of(&self, other: &FlattenedKnowledge) -> bool {
        self.properties.is_subset(&other.properties) && self.pairs.is_subset(&other.pairs)
    }
}

pub fn flatten(graph: &KnowledgeGraph) -> FlattenedKnowledge {
    let mut out = FlattenedKnowledge::default();
    for node in &graph.nodes {
        flatten_object(node, &mut out);
    }
    out
}

fn flatten_object(map: &Map, out: &mut FlattenedKnowledge) {
    for (key, value) in map.iter() {
        let key = nfc(key);
        flatten_held(&key, value, out);
        out.properties.insert(key);
    }
}

fn flatten_held(key: &str, value: &Value, out: &mut FlattenedKnowledge) {
    let primitive = match value {
        Value::Null => Primitive::Null,
        Value::Bool(b) => Primitive::Bool(*b),
        Value::Number(n) => Primitive::Number(n.decimal()),
        Value::String(s) => Primitive::String(nfc(s)),
        Value::Array(items) => {
            for item in items {
                flatten_held(key, item, out);
            }
            return;
        }
        Value::Object(map) => {
            flatten_object(map, out);
            return;
        }
    };
    out.pairs.insert((key.into(), primitive));
}

/// Componentwise subset test over properties and pairs.
pub fn is_subset(a: &FlattenedKnowledge, b: &FlattenedKnowledge) -> bool {
    a.is_subset_of(b)
}
