#![allow(dead_code)]

use ground_eval_core::json::{Map, Number, Value};
use ground_eval_core::KnowledgeGraph;
use proptest::prelude::*;

pub const KEYS: &[&str] = &[
    "@type", "@id", "name", "state", "year", "area_in_km2", "columns", "datatype", "summary", "cluster",
    "tableSchema", "primaryKey", "Größe", "with\"quote",
];

const STRINGS: &[&str] = &[
    "Barnim", "Brandenburg Berlin", "string", "integer", "schema:Place", "café", "cafe\u{301}", "",
    "line\nbreak", "back\\slash", "[bracket]", "\u{1F600}",
];

fn number() -> impl Strategy<Value = Number> {
    prop_oneof![
        (-3000i64..3000).prop_map(Number::from_i64),
        (-3000i64..3000, 1u32..5).prop_map(|(n, d)| Number::parse(&format!("{n}.{}", "5".repeat(d as usize))).unwrap()),
        (1i64..99, -3i32..4).prop_map(|(m, e)| Number::parse(&format!("{m}e{e}")).unwrap()),
    ]
}

pub fn leaf() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        number().prop_map(Value::Number),
        prop::sample::select(STRINGS).prop_map(|s| Value::String(s.into())),
    ]
}

pub fn value() -> impl Strategy<Value = Value> {
    leaf().prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            object(inner).prop_map(Value::Object),
        ]
    })
}

fn object(inner: impl Strategy<Value = Value>) -> impl Strategy<Value = Map> {
    prop::collection::btree_map(prop::sample::select(KEYS), inner, 0..4)
        .prop_map(|m| m.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

pub fn node() -> impl Strategy<Value = Map> {
    object(value())
}

pub fn graph() -> impl Strategy<Value = KnowledgeGraph> {
    prop::collection::vec(node(), 0..5).prop_map(KnowledgeGraph::new)
}

/// `g` plus a sub-multiset of its nodes selected by `mask`.
pub fn sub_graph(g: &KnowledgeGraph, mask: &[bool]) -> KnowledgeGraph {
    let nodes = g
        .nodes()
        .iter()
        .zip(mask.iter().chain(std::iter::repeat(&true)))
        .filter(|(_, keep)| **keep)
        .map(|(n, _)| n.clone())
        .collect();
    KnowledgeGraph::new(nodes)
}

/// Rewrites every integer literal `n` as `n.0`.
pub fn respell(v: &Value) -> Value {
    match v {
        Value::Number(n) if !n.as_str().contains(['.', 'e', 'E']) => {
            Value::Number(Number::parse(&format!("{}.0", n.as_str())).unwrap())
        }
        Value::Array(items) => Value::Array(items.iter().map(respell).collect()),
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.to_string(), respell(v))).collect()),
        other => other.clone(),
    }
}

pub fn respell_graph(g: &KnowledgeGraph) -> KnowledgeGraph {
    KnowledgeGraph::new(
        g.nodes()
            .iter()
            .map(|m| m.iter().map(|(k, v)| (k.to_string(), respell(v))).collect())
            .collect(),
    )
}

/// Reverses every array and object key order, and the node list.
pub fn reorder(v: &Value) -> Value {
    match v {
        Value::Array(items) => Value::Array(items.iter().rev().map(reorder).collect()),
        Value::Object(m) => Value::Object(reorder_map(m)),
        other => other.clone(),
    }
}

fn reorder_map(m: &Map) -> Map {
    let mut pairs: Vec<(String, Value)> = m.iter().map(|(k, v)| (k.to_string(), reorder(v))).collect();
    pairs.reverse();
    pairs.into_iter().collect()
}

pub fn reorder_graph(g: &KnowledgeGraph) -> KnowledgeGraph {
    KnowledgeGraph::new(g.nodes().iter().rev().map(reorder_map).collect())
}
