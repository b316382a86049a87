//! Shared helpers for the integration and acceptance tests: corpus paths,
//! fuzz generators and reference implementations written against
//! serde_json rather than the crate under test.

#![allow(dead_code)]

use std::path::PathBuf;

use ground_eval_core::GroundingAct;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn synthetic_dir() -> PathBuf {
    workspace_root().join("data/synthetic")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Earliest `[` whose shortest `]`-terminated prefix parses as a JSON array.
pub fn prefix_oracle(text: &str) -> Option<&str> {
    for (start, _) in text.match_indices('[') {
        for (end, _) in text[start..].match_indices(']') {
            let candidate = &text[start..start + end + 1];
            if let Ok(Value::Array(_)) = serde_json::from_str(candidate) {
                return Some(candidate);
            }
        }
    }
    None
}

pub fn random_json(rng: &mut ChaCha8Rng, depth: u32) -> Value {
    const STRINGS: &[&str] = &["plain", "with ] bracket", "[open", "quote \" inside", "back\\slash", "ünï", "]\"[", "{}"];
    match rng.random_range(0..if depth == 0 { 5 } else { 7 }) {
        0 => Value::Null,
        1 => Value::Bool(rng.random()),
        2 => Value::from(rng.random_range(-500i64..500)),
        3 => Value::from(rng.random_range(-50.0f64..50.0)),
        4 => Value::from(*STRINGS.choose(rng).unwrap()),
        5 => Value::Array((0..rng.random_range(0..4)).map(|_| random_json(rng, depth - 1)).collect()),
        _ => Value::Object((0..rng.random_range(0..4)).map(|i| (format!("k{i}"), random_json(rng, depth - 1))).collect()),
    }
}

/// Filler text around an embedded array. Quoted brackets are followed by a
/// letter that cannot begin a JSON value; `[oops` only when `allow_open`.
pub fn prose(rng: &mut ChaCha8Rng, allow_open: bool) -> String {
    const WORDS: &[&str] =
        &["Output", "JSON-LD:", "Sure,", "the", "answer", "is", "{", "}", "]", ":", ",", "7", "\n", "don't", "```json", "```"];
    let mut out = String::new();
    for _ in 0..rng.random_range(0..10) {
        match rng.random_range(0..10) {
            0 => {
                let c = *['x', 'y', 'a', 'q', 'Z'].choose(rng).unwrap();
                out.push_str(&format!("\"{c}[{c}\""));
            }
            1 if allow_open => out.push_str("[oops"),
            _ => out.push_str(WORDS.choose(rng).unwrap()),
        }
        out.push(' ');
    }
    out
}

/// Accuracy and macro precision, recall and F1 from per-class TP/FP/FN
/// tallies, with 0 for undefined ratios.
pub fn brute_force_metrics(golds: &[GroundingAct], preds: &[Option<GroundingAct>]) -> [f64; 4] {
    let n = golds.len() as f64;
    let correct = golds.iter().zip(preds).filter(|(g, p)| Some(**g) == **p).count() as f64;
    let mut sums = [0.0; 3];
    for class in GroundingAct::ALL {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for (g, p) in golds.iter().zip(preds) {
            match (*g == class, *p == Some(class)) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fn_ += 1.0,
                (false, false) => {}
            }
        }
        let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        sums[0] += p;
        sums[1] += r;
        sums[2] += f;
    }
    [correct / n, sums[0] / 3.0, sums[1] / 3.0, sums[2] / 3.0]
}

pub fn random_act(rng: &mut ChaCha8Rng) -> GroundingAct {
    *GroundingAct::ALL.choose(rng).unwrap()
}

/// A raw model answer for `pred`, or text without any label for `None`.
pub fn raw_answer(rng: &mut ChaCha8Rng, pred: Option<GroundingAct>) -> String {
    match pred {
        None => ["I am not sure.", "No label applies", "n/a"].choose(rng).unwrap().to_string(),
        Some(act) => {
            let label = act.as_str();
            let upper = label[..1].to_uppercase() + &label[1..];
            match rng.random_range(0..3) {
                0 => format!("Output Label: {label}"),
                1 => format!("{upper}."),
                _ => format!("The response is {}, because it repeats the fact.", label.to_uppercase()),
            }
        }
    }
}

/// A scalar written as JSON text, with integral numbers in one of two spellings.
#[derive(Debug, Clone)]
pub enum Leaf {
    Int(i64),
    Decimal(&'static str),
    Str(&'static str),
    Bool(bool),
    Null,
}

impl Leaf {
    pub fn render(&self, respell: bool) -> String {
        match self {
            Leaf::Int(n) if respell => format!("{n}.0"),
            Leaf::Int(n) => n.to_string(),
            Leaf::Decimal(d) => (*d).to_string(),
            Leaf::Str(s) => serde_json::to_string(s).unwrap(),
            Leaf::Bool(b) => b.to_string(),
            Leaf::Null => "null".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Tree {
    Leaf(Leaf),
    List(Vec<Tree>),
    Object(Vec<(String, Tree)>),
}

impl Tree {
    pub fn render(&self, respell: bool) -> String {
        match self {
            Tree::Leaf(l) => l.render(respell),
            Tree::List(items) => format!("[{}]", items.iter().map(|t| t.render(respell)).collect::<Vec<_>>().join(", ")),
            Tree::Object(fields) => format!(
                "{{{}}}",
                fields
                    .iter()
                    .map(|(k, v)| format!("{}: {}", serde_json::to_string(k).unwrap(), v.render(respell)))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }
}

const KEYS: &[&str] = &["@type", "@id", "name", "year", "Größe", "genre", "with\"quote", "area", "members", "cafe"];
const STRINGS: &[&str] = &["Barnim", "café", "cafe\u{301}", "", "line\nbreak", "emoji 🌍", "[x]", "schema:Place"];
const DECIMALS: &[&str] = &["2.5", "-0.125", "1e3", "6.02E23", "0.1", "1.50"];

pub fn random_leaf(rng: &mut ChaCha8Rng) -> Leaf {
    match rng.random_range(0..6) {
        0 | 1 => Leaf::Int(rng.random_range(-10_000..10_000)),
        2 => Leaf::Decimal(DECIMALS.choose(rng).unwrap()),
        3 => Leaf::Str(STRINGS.choose(rng).unwrap()),
        4 => Leaf::Bool(rng.random()),
        _ => Leaf::Null,
    }
}

fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Tree {
    match rng.random_range(0..if depth == 0 { 1 } else { 4 }) {
        0 | 1 => Tree::Leaf(random_leaf(rng)),
        2 => Tree::List((0..rng.random_range(0..4)).map(|_| random_tree(rng, depth - 1)).collect()),
        _ => Tree::Object(random_fields(rng, depth - 1)),
    }
}

fn random_fields(rng: &mut ChaCha8Rng, depth: u32) -> Vec<(String, Tree)> {
    let mut keys: Vec<&str> = KEYS.to_vec();
    let n = rng.random_range(0..5);
    let mut fields = Vec::new();
    for _ in 0..n {
        let i = rng.random_range(0..keys.len());
        fields.push((keys.swap_remove(i).to_string(), random_tree(rng, depth)));
    }
    fields
}

/// A graph: a JSON array of objects.
pub fn random_graph(rng: &mut ChaCha8Rng) -> Tree {
    Tree::List((0..rng.random_range(0..4)).map(|_| Tree::Object(random_fields(rng, 2))).collect())
}

/// A flat single-node system graph with distinct properties.
pub fn random_system(rng: &mut ChaCha8Rng) -> Map<String, Value> {
    let mut node = Map::new();
    node.insert("@type".into(), Value::from("schema:Thing"));
    node.insert("name".into(), Value::from(format!("Entity {}", rng.random_range(0..100))));
    for i in 0..rng.random_range(1..6) {
        let value = match rng.random_range(0..3) {
            0 => Value::from(rng.random_range(0..2000)),
            1 => Value::from(format!("v{}", rng.random_range(0..50))),
            _ => Value::Array((0..rng.random_range(1..4)).map(|j| Value::from(format!("item{j}"))).collect()),
        };
        node.insert(format!("p{i}"), value);
    }
    node
}

/// Random sub-node of `node`: each property kept with probability 1/2,
/// arrays possibly trimmed to a prefix.
pub fn random_subnode(rng: &mut ChaCha8Rng, node: &Map<String, Value>) -> Map<String, Value> {
    let mut out = Map::new();
    for (k, v) in node {
        if !rng.random_bool(0.5) {
            continue;
        }
        let v = match v {
            Value::Array(items) if items.len() > 1 && rng.random() => {
                Value::Array(items[..rng.random_range(1..items.len())].to_vec())
            }
            v => v.clone(),
        };
        out.insert(k.clone(), v);
    }
    out
}

/// A prediction near `gold` within `system`: a mixture of gold, extra
/// system properties, invented properties, altered values and dropped keys;
/// sometimes unparsable.
pub fn random_prediction(rng: &mut ChaCha8Rng, gold: &Map<String, Value>, system: &Map<String, Value>) -> String {
    match rng.random_range(0..12) {
        0 => return "I cannot tell.".into(),
        1 => return "Output JSON-LD: [{\"name\": ".into(),
        2 => return "[]".into(),
        _ => {}
    }
    let mut node = gold.clone();
    for (k, v) in system {
        if rng.random_bool(0.2) {
            node.insert(k.clone(), v.clone());
        }
    }
    let keys: Vec<String> = node.keys().cloned().collect();
    for k in keys {
        match rng.random_range(0..10) {
            0 => {
                node.remove(&k);
            }
            1 => {
                node.insert(k, Value::from("invented"));
            }
            _ => {}
        }
    }
    if rng.random_bool(0.2) {
        node.insert("madeUp".into(), Value::from(1));
    }
    let body = serde_json::to_string(&Value::Array(vec![Value::Object(node)])).unwrap();
    if rng.random() {
        format!("Output JSON-LD: {body}")
    } else {
        body
    }
}
