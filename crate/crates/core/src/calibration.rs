//! Uncertainty scores and the delegation threshold.
//!
//! Scores are collected on a calibration split, sorted ascending, and the
//! threshold is placed just below the `k` largest, with
//! `k = ceil(fraction * n)`. Routing delegates a record iff its uncertainty
//! is strictly greater than the threshold.

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base_model::{PredictionRecord, ProbabilityVector};

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("no records to calibrate on")]
    Empty,
    #[error("delegation fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("score {0} outside [0, 1]")]
    Score(f64),
    #[error("no gold label for `{0}` (oracle score)")]
    MissingGold(String),
    #[error("profile json: {0}")]
    Json(String),
}

/// `1 - max(p)`. Zero for a one-hot vector, `1 - 1/K` for a uniform one.
pub fn uncertainty(probs: &ProbabilityVector) -> f64 {
    let max = probs
        .probs()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (1.0 - max).clamp(0.0, 1.0)
}

/// Label-dependent score `1 - p(gold)`: the distance of the predicted
/// distribution from the one-hot gold vector on the gold coordinate.
/// Needs gold labels, so it is for offline analysis only and never drives
/// routing on evaluation data.
pub fn oracle_score(probs: &ProbabilityVector, gold: &str) -> Option<f64> {
    let idx = probs.scheme().index_of(gold)?;
    Some((1.0 - probs.probs()[idx]).clamp(0.0, 1.0))
}

/// Which score populates the calibration set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMode {
    /// `1 - max(p)`, label free.
    #[default]
    Confidence,
    /// `1 - p(gold)`; analysis only.
    OracleGold,
}

/// Delegation count for a fraction of `n` items: `ceil(fraction * n)`,
/// with products within 1e-9 of an integer treated as that integer.
pub fn delegation_count(fraction: f64, n: usize) -> usize {
    let exact = fraction * n as f64;
    let nearest = exact.round();
    let k = if (exact - nearest).abs() < 1e-9 {
        nearest
    } else {
        exact.ceil()
    };
    (k.max(0.0) as usize).min(n)
}

/// Sorted calibration scores plus the derived threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    #[serde(skip)]
    scores: Vec<f64>,
    #[serde(rename = "fraction")]
    delegation_fraction: f64,
    k: usize,
    #[serde(with = "gamma_json")]
    gamma: f64,
    n: usize,
}

// Sentinel thresholds are written as `null`; the sign is recovered from k.
mod gamma_json {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(gamma: &f64, s: S) -> Result<S::Ok, S::Error> {
        if gamma.is_finite() {
            s.serialize_f64(*gamma)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl CalibrationProfile {
    /// Builds a profile from raw scores (any order).
    pub fn from_scores(mut scores: Vec<f64>, fraction: f64) -> Result<Self, CalibrationError> {
        if scores.is_empty() {
            return Err(CalibrationError::Empty);
        }
        if !(0.0..=1.0).contains(&fraction) {
            return Err(CalibrationError::Fraction(fraction));
        }
        if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(CalibrationError::Score(bad));
        }
        scores.sort_by(f64::total_cmp);
        let n = scores.len();
        let k = delegation_count(fraction, n);
        let gamma = if k == 0 {
            f64::INFINITY
        } else if k == n {
            f64::NEG_INFINITY
        } else {
            scores[n - k - 1]
        };
        Ok(CalibrationProfile {
            scores,
            delegation_fraction: fraction,
            k,
            gamma,
            n,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn delegation_fraction(&self) -> f64 {
        self.delegation_fraction
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delegates(&self, uncertainty: f64) -> bool {
        uncertainty > self.gamma
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("profile always serializes")
    }

    /// Restores a profile written by [`to_json`](Self::to_json). The score
    /// list is not persisted, so the restored profile has none.
    pub fn from_json(text: &str) -> Result<Self, CalibrationError> {
        let mut profile: CalibrationProfile =
            serde_json::from_str(text).map_err(|e| CalibrationError::Json(e.to_string()))?;
        if !(0.0..=1.0).contains(&profile.delegation_fraction) {
            return Err(CalibrationError::Fraction(profile.delegation_fraction));
        }
        if profile.k > profile.n {
            return Err(CalibrationError::Json(format!(
                "k = {} exceeds n = {}",
                profile.k, profile.n
            )));
        }
        if profile.gamma.is_nan() {
            profile.gamma = if profile.k == 0 {
                f64::INFINITY
            } else if profile.k == profile.n {
                f64::NEG_INFINITY
            } else {
                return Err(CalibrationError::Json(
                    "gamma is null but 0 < k < n".into(),
                ));
            };
        }
        Ok(profile)
    }
}

/// Calibrates on the label-free uncertainty of each record.
pub fn calibrate(
    records: &[PredictionRecord],
    delegation_fraction: f64,
) -> Result<CalibrationProfile, CalibrationError> {
    CalibrationProfile::from_scores(
        records.iter().map(|r| r.uncertainty).collect(),
        delegation_fraction,
    )
}

/// Calibrates with an explicit score mode. `OracleGold` requires a gold
/// label for every record.
pub fn calibrate_with(
    records: &[PredictionRecord],
    delegation_fraction: f64,
    mode: ScoreMode,
    gold: &HashMap<String, String>,
) -> Result<CalibrationProfile, CalibrationError> {
    match mode {
        ScoreMode::Confidence => calibrate(records, delegation_fraction),
        ScoreMode::OracleGold => {
            let scores = records
                .iter()
                .map(|r| {
                    gold.get(&r.sample_id)
                        .and_then(|g| oracle_score(&r.probs, g))
                        .ok_or_else(|| CalibrationError::MissingGold(r.sample_id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            CalibrationProfile::from_scores(scores, delegation_fraction)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Route {
    Base,
    Llm,
}

/// Routing decision per record, in input order.
pub fn route(records: &[PredictionRecord], profile: &CalibrationProfile) -> IndexMap<String, Route> {
    records
        .iter()
        .map(|r| {
            let route = if profile.delegates(r.uncertainty) {
                Route::Llm
            } else {
                Route::Base
            };
            (r.sample_id.clone(), route)
        })
        .collect()
}
