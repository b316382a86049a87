//! Confusion matrix and macro-averaged metrics for grounding-act predictions.
//!
//! Predictions that could not be extracted land in a fourth "none" column.
//! They count as errors for accuracy and as false negatives of their gold
//! class, and never as a false positive of any class.

use serde::{Deserialize, Serialize};

use crate::corpus::GroundingAct;

const CLASSES: usize = 3;
const NONE_COLUMN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("{golds} gold labels but {preds} predictions")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("no instances to score")]
    Empty,
}

/// Counts indexed `[gold][predicted]`; column 3 holds unparsable predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; CLASSES + 1]; CLASSES],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 4]; 3]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn counts(&self) -> &[[u64; 4]; 3] {
        &self.counts
    }

    pub fn add(&mut self, gold: GroundingAct, pred: Option<GroundingAct>) {
        let col = pred.map_or(NONE_COLUMN, GroundingAct::index);
        self.counts[gold.index()][col] += 1;
    }

    pub fn get(&self, gold: GroundingAct, pred: Option<GroundingAct>) -> u64 {
        self.counts[gold.index()][pred.map_or(NONE_COLUMN, GroundingAct::index)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn unparsable(&self) -> u64 {
        self.counts.iter().map(|row| row[NONE_COLUMN]).sum()
    }
}

pub fn confusion(
    golds: &[GroundingAct],
    preds: &[Option<GroundingAct>],
) -> Result<ConfusionMatrix, MetricsError> {
    if golds.len() != preds.len() {
        return Err(MetricsError::LengthMismatch { golds: golds.len(), preds: preds.len() });
    }
    if golds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&gold, &pred) in golds.iter().zip(preds) {
        cm.add(gold, pred);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold instances of the class.
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActMetrics {
    pub total: u64,
    /// Correct predictions over all instances.
    pub accuracy: f64,
    /// Mean per-class recall (equal to `macro_recall`).
    pub balanced_accuracy: f64,
    pub explicit: ClassMetrics,
    pub implicit: ClassMetrics,
    pub clarification: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl ActMetrics {
    pub fn class(&self, act: GroundingAct) -> &ClassMetrics {
        match act {
            GroundingAct::Explicit => &self.explicit,
            GroundingAct::Implicit => &self.implicit,
            GroundingAct::Clarification => &self.clarification,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Mean of `num/den` ratios (0 for 0/0) as one rounding of the exact rational.
fn mean_ratio(parts: &[(u64, u64)]) -> f64 {
    let (mut num, mut den) = (0u128, 1u128);
    for &(n, d) in parts {
        if d == 0 {
            continue;
        }
        let (n, d) = (u128::from(n), u128::from(d));
        num = num * d + n * den;
        den *= d;
        let g = gcd(num, den);
        (num, den) = (num / g, den / g);
    }
    den *= parts.len() as u128;
    let g = gcd(num, den);
    (num, den) = (num / g, den / g);
    if num < 1 << 53 && den < 1 << 53 {
        num as f64 / den as f64
    } else {
        parts.iter().map(|&(n, d)| ratio(n, d)).sum::<f64>() / parts.len() as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn act_metrics(cm: &ConfusionMatrix) -> Result<ActMetrics, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let tallies = GroundingAct::ALL.map(|act| {
        let k = act.index();
        let tp = cm.counts[k][k];
        let predicted: u64 = (0..CLASSES).map(|g| cm.counts[g][k]).sum();
        let support: u64 = cm.counts[k].iter().sum();
        (tp, predicted, support)
    });
    let per_class = tallies.map(|(tp, predicted, support)| {
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        ClassMetrics { precision, recall, f1: harmonic(precision, recall), support }
    });
    let macro_recall = mean_ratio(&tallies.map(|(tp, _, support)| (tp, support)));
    Ok(ActMetrics {
        total,
        accuracy: ratio(cm.correct(), total),
        balanced_accuracy: macro_recall,
        explicit: per_class[0],
        implicit: per_class[1],
        clarification: per_class[2],
        macro_precision: mean_ratio(&tallies.map(|(tp, predicted, _)| (tp, predicted))),
        macro_recall,
        macro_f1: per_class.iter().map(|c| c.f1).sum::<f64>() / CLASSES as f64,
    })
}
