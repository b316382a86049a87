//! Validity tiers and issue taxonomy for knowledge-identification predictions.
//!
//! With `P`, `G`, `S` the flattened prediction, gold and system knowledge:
//!
//! | issue                  | offenders                                  |
//! |------------------------|--------------------------------------------|
//! | property hallucination | `P.properties \ S.properties`              |
//! | value hallucination    | `P.pairs \ S.pairs`, key in `S.properties` |
//! | property excess        | `(P.properties ∩ S.properties) \ G.properties` |
//! | property deficit       | `G.properties \ P.properties`              |
//! | value excess           | `(P.pairs ∩ S.pairs) \ G.pairs`            |
//! | value deficit          | `G.pairs \ P.pairs`                        |
//!
//! A prediction that cannot be extracted or parsed is `InvalidJsonLd`, plus
//! deficits for whatever gold content exists.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::extract::{extract_jsonld_with, ExtractOptions};
use crate::kg::{flatten, graphs_identical, parse_graph, FlattenedKnowledge, KnowledgeGraph, Primitive};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Invalid,
    ValidJsonld,
    ValidProperties,
    ValidValues,
    Identical,
}

impl Tier {
    pub const ALL: [Tier; 5] =
        [Tier::Invalid, Tier::ValidJsonld, Tier::ValidProperties, Tier::ValidValues, Tier::Identical];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Invalid => "invalid",
            Tier::ValidJsonld => "valid_jsonld",
            Tier::ValidProperties => "valid_properties",
            Tier::ValidValues => "valid_values",
            Tier::Identical => "identical",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Issue {
    InvalidJsonLd,
    PropertyHallucination,
    ValueHallucination,
    PropertyExcess,
    PropertyDeficit,
    ValueExcess,
    ValueDeficit,
}

impl Issue {
    pub const ALL: [Issue; 7] = [
        Issue::InvalidJsonLd,
        Issue::PropertyHallucination,
        Issue::ValueHallucination,
        Issue::PropertyExcess,
        Issue::PropertyDeficit,
        Issue::ValueExcess,
        Issue::ValueDeficit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Issue::InvalidJsonLd => "invalid_json_ld",
            Issue::PropertyHallucination => "property_hallucination",
            Issue::ValueHallucination => "value_hallucination",
            Issue::PropertyExcess => "property_excess",
            Issue::PropertyDeficit => "property_deficit",
            Issue::ValueExcess => "value_excess",
            Issue::ValueDeficit => "value_deficit",
        }
    }

    /// Row label in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Issue::InvalidJsonLd => "Invalid JSON-LD",
            Issue::PropertyHallucination => "Property Hallucination",
            Issue::ValueHallucination => "Value Hallucination",
            Issue::PropertyExcess => "Property Excess",
            Issue::PropertyDeficit => "Property Deficit",
            Issue::ValueExcess => "Value Excess",
            Issue::ValueDeficit => "Value Deficit",
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Offending property names and `(key, value)` pairs behind each issue.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IssueDetail {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hallucinated_properties: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hallucinated_values: Vec<(String, Primitive)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excess_properties: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub missing_properties: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excess_values: Vec<(String, Primitive)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub missing_values: Vec<(String, Primitive)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnowledgeAssessment {
    pub tier: Tier,
    pub issues: BTreeSet<Issue>,
    pub detail: IssueDetail,
}

impl KnowledgeAssessment {
    pub fn has(&self, issue: Issue) -> bool {
        self.issues.contains(&issue)
    }
}

pub fn assess_prediction(pred_text: &str, gold: &KnowledgeGraph, system: &KnowledgeGraph) -> KnowledgeAssessment {
    assess_prediction_with(pred_text, gold, system, ExtractOptions::default())
}

pub fn assess_prediction_with(
    pred_text: &str,
    gold: &KnowledgeGraph,
    system: &KnowledgeGraph,
    opts: ExtractOptions,
) -> KnowledgeAssessment {
    let parsed = extract_jsonld_with(pred_text, opts)
        .map_err(|e| e.to_string())
        .and_then(|slice| parse_graph(slice).map_err(|e| e.to_string()));
    match parsed {
        Ok(pred) => assess_graph(&pred, gold, system),
        Err(reason) => invalid(reason, gold),
    }
}

fn invalid(reason: String, gold: &KnowledgeGraph) -> KnowledgeAssessment {
    let gold = flatten(gold);
    let detail = IssueDetail {
        failure: Some(reason),
        missing_properties: gold.properties.into_iter().collect(),
        missing_values: gold.pairs.into_iter().collect(),
        ..IssueDetail::default()
    };
    let mut issues = BTreeSet::from([Issue::InvalidJsonLd]);
    if !detail.missing_properties.is_empty() {
        issues.insert(Issue::PropertyDeficit);
    }
    if !detail.missing_values.is_empty() {
        issues.insert(Issue::ValueDeficit);
    }
    KnowledgeAssessment { tier: Tier::Invalid, issues, detail }
}

/// Assessment of an already parsed prediction.
pub fn assess_graph(pred: &KnowledgeGraph, gold: &KnowledgeGraph, system: &KnowledgeGraph) -> KnowledgeAssessment {
    let p = flatten(pred);
    let g = flatten(gold);
    let s = flatten(system);
    let detail = compare(&p, &g, &s);

    let mut issues = BTreeSet::new();
    let flags = [
        (Issue::PropertyHallucination, detail.hallucinated_properties.is_empty()),
        (Issue::ValueHallucination, detail.hallucinated_values.is_empty()),
        (Issue::PropertyExcess, detail.excess_properties.is_empty()),
        (Issue::PropertyDeficit, detail.missing_properties.is_empty()),
        (Issue::ValueExcess, detail.excess_values.is_empty()),
        (Issue::ValueDeficit, detail.missing_values.is_empty()),
    ];
    for (issue, clean) in flags {
        if !clean {
            issues.insert(issue);
        }
    }

    let tier = if graphs_identical(pred, gold) {
        Tier::Identical
    } else if p.properties == g.properties && p.pairs == g.pairs {
        Tier::ValidValues
    } else if p.properties == g.properties {
        Tier::ValidProperties
    } else {
        Tier::ValidJsonld
    };
    KnowledgeAssessment { tier, issues, detail }
}

fn compare(p: &FlattenedKnowledge, g: &FlattenedKnowledge, s: &FlattenedKnowledge) -> IssueDetail {
    IssueDetail {
        failure: None,
        hallucinated_properties: p.properties.difference(&s.properties).cloned().collect(),
        hallucinated_values: p
            .pairs
            .difference(&s.pairs)
            .filter(|(key, _)| s.properties.contains(key))
            .cloned()
            .collect(),
        excess_properties: p
            .properties
            .intersection(&s.properties)
            .filter(|k| !g.properties.contains(*k))
            .cloned()
            .collect(),
        missing_properties: g.properties.difference(&p.properties).cloned().collect(),
        excess_values: p
            .pairs
            .intersection(&s.pairs)
            .filter(|pair| !g.pairs.contains(*pair))
            .cloned()
            .collect(),
        missing_values: g.pairs.difference(&p.pairs).cloned().collect(),
    }
}

/// Denominator used for every issue other than `InvalidJsonLd`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    #[default]
    AllInstances,
    ExcludeInvalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssueCount {
    pub issue: Issue,
    pub count: u64,
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCounts {
    pub invalid: u64,
    pub valid_jsonld: u64,
    pub valid_properties: u64,
    pub valid_values: u64,
    pub identical: u64,
}

impl TierCounts {
    pub fn get(&self, tier: Tier) -> u64 {
        match tier {
            Tier::Invalid => self.invalid,
            Tier::ValidJsonld => self.valid_jsonld,
            Tier::ValidProperties => self.valid_properties,
            Tier::ValidValues => self.valid_values,
            Tier::Identical => self.identical,
        }
    }

    fn slot(&mut self, tier: Tier) -> &mut u64 {
        match tier {
            Tier::Invalid => &mut self.invalid,
            Tier::ValidJsonld => &mut self.valid_jsonld,
            Tier::ValidProperties => &mut self.valid_properties,
            Tier::ValidValues => &mut self.valid_values,
            Tier::Identical => &mut self.identical,
        }
    }

    pub fn total(&self) -> u64 {
        Tier::ALL.iter().map(|&t| self.get(t)).sum()
    }

    /// Predictions reaching at least `tier` (the stacked counts).
    pub fn at_least(&self, tier: Tier) -> u64 {
        Tier::ALL.iter().filter(|&&t| t >= tier).map(|&t| self.get(t)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueFrequencies {
    pub total: u64,
    pub denominator: Denominator,
    /// In `Issue::ALL` order.
    pub issues: Vec<IssueCount>,
    /// Exact tier of each prediction.
    pub tiers: TierCounts,
}

impl IssueFrequencies {
    pub fn get(&self, issue: Issue) -> &IssueCount {
        // issues is built from Issue::ALL, so every issue is present at its index
        &self.issues[issue as usize]
    }

    pub fn frequency(&self, issue: Issue) -> f64 {
        self.get(issue).frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no assessments to aggregate")]
pub struct EmptyAggregate;

pub fn aggregate(assessments: &[KnowledgeAssessment]) -> Result<IssueFrequencies, EmptyAggregate> {
    aggregate_with(assessments, Denominator::AllInstances)
}

pub fn aggregate_with(
    assessments: &[KnowledgeAssessment],
    denominator: Denominator,
) -> Result<IssueFrequencies, EmptyAggregate> {
    if assessments.is_empty() {
        return Err(EmptyAggregate);
    }
    let total = assessments.len() as u64;
    let mut tiers = TierCounts::default();
    for a in assessments {
        *tiers.slot(a.tier) += 1;
    }
    let scored = match denominator {
        Denominator::AllInstances => total,
        Denominator::ExcludeInvalid => total - tiers.invalid,
    };
    let issues = Issue::ALL
        .iter()
        .map(|&issue| {
            let (count, den) = match (issue, denominator) {
                (Issue::InvalidJsonLd, _) | (_, Denominator::AllInstances) => {
                    (assessments.iter().filter(|a| a.has(issue)).count() as u64, total)
                }
                (_, Denominator::ExcludeInvalid) => (
                    assessments
                        .iter()
                        .filter(|a| a.tier != Tier::Invalid && a.has(issue))
                        .count() as u64,
                    scored,
                ),
            };
            let frequency = if den == 0 { 0.0 } else { count as f64 / den as f64 };
            IssueCount { issue, count, frequency }
        })
        .collect();
    Ok(IssueFrequencies { total, denominator, issues, tiers })
}
