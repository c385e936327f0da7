//! Accuracy, per-class precision/recall/F1, macro F1 and delegation
//! accounting. All reported quantities are percentages.

use std::collections::HashMap;
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base_model::PredictionRecord;
use crate::cascade::{CascadeResult, CostTally, Source};
use crate::corpus::LabelScheme;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no gold label for `{0}`")]
    MissingGold(String),
    #[error("label `{label}` for `{id}` is not in {scheme}")]
    UnknownLabel {
        id: String,
        label: String,
        scheme: LabelScheme,
    },
    #[error("cannot compare {0} with {1}")]
    SchemeMismatch(LabelScheme, LabelScheme),
}

/// Anything carrying a final label for a sample.
pub trait Scored {
    fn sample_id(&self) -> &str;
    fn label(&self) -> &str;
    /// Where the label came from; `None` for plain base predictions.
    fn source(&self) -> Option<Source> {
        None
    }
}

impl Scored for CascadeResult {
    fn sample_id(&self) -> &str {
        &self.sample_id
    }
    fn label(&self) -> &str {
        &self.final_label
    }
    fn source(&self) -> Option<Source> {
        Some(self.source)
    }
}

impl Scored for PredictionRecord {
    fn sample_id(&self) -> &str {
        &self.sample_id
    }
    fn label(&self) -> &str {
        &self.predicted_label
    }
}

/// Half-up rounding to two decimals.
pub fn round2(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let scaled = x * 100.0;
    // absorb representation error so that e.g. 69.695 rounds up
    let nudged = scaled + scaled.abs() * 1e-12;
    (nudged + 0.5).floor() / 100.0
}

mod pct {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::round2(*x))
    }

    pub fn option<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_f64(super::round2(*v)),
            None => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    #[serde(serialize_with = "pct::serialize")]
    pub precision: f64,
    #[serde(serialize_with = "pct::serialize")]
    pub recall: f64,
    #[serde(serialize_with = "pct::serialize")]
    pub f1: f64,
    pub support: usize,
    /// No gold instances of this class; its F1 is 0 and still averaged.
    #[serde(default)]
    pub zero_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelegationStats {
    pub fraction_routed: f64,
    #[serde(serialize_with = "pct::option")]
    pub accuracy_routed: Option<f64>,
    #[serde(serialize_with = "pct::option")]
    pub accuracy_kept: Option<f64>,
    pub fallback_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scheme: LabelScheme,
    pub n: usize,
    #[serde(serialize_with = "pct::serialize")]
    pub top1: f64,
    pub per_class: IndexMap<String, ClassMetrics>,
    #[serde(serialize_with = "pct::serialize")]
    pub macro_f1: f64,
    pub delegation: DelegationStats,
    pub cost: CostTally,
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Scores `results` against `gold`. Every result id needs a gold label.
pub fn evaluate<T: Scored>(
    results: &[T],
    gold: &HashMap<String, String>,
    scheme: LabelScheme,
) -> Result<EvaluationReport, MetricsError> {
    let k = scheme.num_classes();
    let index = |id: &str, label: &str| {
        scheme.index_of(label).ok_or_else(|| MetricsError::UnknownLabel {
            id: id.to_string(),
            label: label.to_string(),
            scheme,
        })
    };

    // confusion[gold][predicted]
    let mut confusion = vec![vec![0usize; k]; k];
    let (mut routed, mut routed_correct, mut kept, mut kept_correct, mut fallback) = (0, 0, 0, 0, 0);
    for r in results {
        let id = r.sample_id();
        let gold_label = gold.get(id).ok_or_else(|| MetricsError::MissingGold(id.to_string()))?;
        let g = index(id, gold_label)?;
        let p = index(id, r.label())?;
        confusion[g][p] += 1;
        let correct = g == p;
        match r.source() {
            Some(Source::Base) | None => {
                kept += 1;
                kept_correct += usize::from(correct);
            }
            Some(source) => {
                routed += 1;
                routed_correct += usize::from(correct);
                if source == Source::LlmFallbackBase {
                    fallback += 1;
                }
            }
        }
    }

    let n = results.len();
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let mut per_class = IndexMap::new();
    for (c, name) in scheme.classes().iter().enumerate() {
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = (0..k).map(|g| confusion[g][c]).sum();
        let precision = percent(tp, predicted);
        let recall = percent(tp, support);
        let f1 = percent(2 * tp, predicted + support);
        per_class.insert(
            name.to_string(),
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
                zero_support: support == 0,
            },
        );
    }
    let macro_f1 = per_class.values().map(|m| m.f1).sum::<f64>() / k as f64;

    Ok(EvaluationReport {
        scheme,
        n,
        top1: percent(correct, n),
        per_class,
        macro_f1,
        delegation: DelegationStats {
            fraction_routed: if n == 0 { 0.0 } else { routed as f64 / n as f64 },
            accuracy_routed: (routed > 0).then(|| percent(routed_correct, routed)),
            accuracy_kept: (kept > 0).then(|| percent(kept_correct, kept)),
            fallback_count: fallback,
        },
        cost: CostTally::default(),
    })
}

impl EvaluationReport {
    pub fn with_cost(mut self, cost: CostTally) -> Self {
        self.cost = cost;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Micro-averaged F1. Equals top-1 for single-label data.
    pub fn micro_f1(&self) -> f64 {
        let tp: f64 = self
            .per_class
            .values()
            .map(|m| m.recall * m.support as f64 / 100.0)
            .sum();
        percent(tp.round() as usize, self.n)
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scheme {}   n = {}", self.scheme, self.n);
        let _ = writeln!(
            out,
            "{:<8} {:>10} {:>10} {:>10} {:>8}",
            "class", "precision", "recall", "F1", "support"
        );
        for (name, m) in &self.per_class {
            let _ = writeln!(
                out,
                "{:<8} {:>10.2} {:>10.2} {:>10.2} {:>8}{}",
                name,
                round2(m.precision),
                round2(m.recall),
                round2(m.f1),
                m.support,
                if m.zero_support { "  (no support)" } else { "" }
            );
        }
        let _ = writeln!(out, "{:<8} {:>10.2}", "top1", round2(self.top1));
        let _ = writeln!(out, "{:<8} {:>10.2}", "macroF1", round2(self.macro_f1));
        let d = &self.delegation;
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{:.2}", round2(v)));
        let _ = writeln!(
            out,
            "delegated {:.2}%   acc(routed) {}   acc(kept) {}   fallbacks {}",
            round2(100.0 * d.fraction_routed),
            opt(d.accuracy_routed),
            opt(d.accuracy_kept),
            d.fallback_count
        );
        let c = &self.cost;
        let _ = writeln!(
            out,
            "llm calls {}   http attempts {}   cache hits {}   tokens {} + {}",
            c.llm_calls, c.network_attempts, c.cache_hits, c.prompt_tokens, c.completion_tokens
        );
        out
    }
}

/// Signed differences `b - a`, in percentage points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta {
    #[serde(serialize_with = "pct::serialize")]
    pub top1: f64,
    #[serde(serialize_with = "pct::serialize")]
    pub macro_f1: f64,
    pub per_class_f1: IndexMap<String, f64>,
    pub fraction_routed: f64,
}

impl ReportDelta {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>+9.2}", "top1", round2(self.top1));
        let _ = writeln!(out, "{:<10} {:>+9.2}", "macroF1", round2(self.macro_f1));
        for (name, d) in &self.per_class_f1 {
            let _ = writeln!(out, "{:<10} {:>+9.2}", format!("F1 {name}"), round2(*d));
        }
        let _ = writeln!(
            out,
            "{:<10} {:>+9.2}",
            "routed%",
            round2(100.0 * self.fraction_routed)
        );
        out
    }
}

pub fn compare(a: &EvaluationReport, b: &EvaluationReport) -> Result<ReportDelta, MetricsError> {
    if a.scheme != b.scheme {
        return Err(MetricsError::SchemeMismatch(a.scheme, b.scheme));
    }
    Ok(ReportDelta {
        top1: b.top1 - a.top1,
        macro_f1: b.macro_f1 - a.macro_f1,
        per_class_f1: a
            .per_class
            .iter()
            .map(|(name, ma)| {
                let fb = b.per_class.get(name).map_or(0.0, |m| m.f1);
                (name.clone(), fb - ma.f1)
            })
            .collect(),
        fraction_routed: b.delegation.fraction_routed - a.delegation.fraction_routed,
    })
}
