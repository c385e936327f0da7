//! Two-tier orchestration: route uncertain records to the refiner and keep
//! the base label for the rest.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base_model::PredictionRecord;
use crate::calibration::{calibrate, route, CalibrationError, CalibrationProfile, Route};
use crate::corpus::{ArgumentSample, UnlabeledSample};
use crate::refiner::{LlmVerdict, Refiner, RefinerError, VerdictLabel};

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("no sample with id `{0}` for prediction record")]
    MissingSample(String),
    #[error("sample `{id}` is {sample} but its prediction is {record}")]
    SchemeMismatch {
        id: String,
        sample: String,
        record: String,
    },
    #[error("refiner returned {found} verdicts for {expected} delegated samples")]
    VerdictCount { expected: usize, found: usize },
    #[error("refiner verdict for `{found}` where `{expected}` was expected")]
    VerdictOrder { expected: String, found: String },
    #[error(transparent)]
    Refiner(#[from] RefinerError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Base,
    Llm,
    /// Delegated, but the verdict was unparseable or never arrived.
    LlmFallbackBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeResult {
    #[serde(rename = "id")]
    pub sample_id: String,
    #[serde(rename = "final")]
    pub final_label: String,
    pub source: Source,
    #[serde(rename = "base")]
    pub base_prediction: String,
    pub uncertainty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_raw: Option<String>,
}

/// LLM usage for one cascade run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostTally {
    /// Delegated samples handed to the refiner.
    pub llm_calls: u64,
    /// HTTP attempts, retries included.
    pub network_attempts: u64,
    pub cache_hits: u64,
    pub transport_failures: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl CostTally {
    fn add(&mut self, v: &LlmVerdict) {
        self.llm_calls += 1;
        self.network_attempts += u64::from(v.attempts);
        if v.from_cache {
            self.cache_hits += 1;
        } else {
            self.prompt_tokens += v.prompt_tokens;
            self.completion_tokens += v.completion_tokens;
        }
        if matches!(v.parsed_label, VerdictLabel::TransportFailure(_)) {
            self.transport_failures += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutput {
    pub results: Vec<CascadeResult>,
    pub cost: CostTally,
}

/// Routes `records` under `profile`, asks `refiner` about the delegated
/// ones and assembles one result per record in input order.
///
/// The refiner only ever sees label-free views of the samples.
pub fn run_cascade(
    records: &[PredictionRecord],
    samples: &[ArgumentSample],
    profile: &CalibrationProfile,
    refiner: &dyn Refiner,
) -> Result<CascadeOutput, CascadeError> {
    let by_id: HashMap<&str, &ArgumentSample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let aligned: Vec<&ArgumentSample> = records
        .iter()
        .map(|r| {
            let sample = by_id
                .get(r.sample_id.as_str())
                .copied()
                .ok_or_else(|| CascadeError::MissingSample(r.sample_id.clone()))?;
            if sample.scheme != r.scheme() {
                return Err(CascadeError::SchemeMismatch {
                    id: r.sample_id.clone(),
                    sample: sample.scheme.to_string(),
                    record: r.scheme().to_string(),
                });
            }
            Ok(sample)
        })
        .collect::<Result<_, _>>()?;

    refiner.preflight()?;

    let routes = route(records, profile);
    let delegated: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| routes[&r.sample_id] == Route::Llm)
        .map(|(i, _)| i)
        .collect();

    let mut cost = CostTally::default();
    let mut verdicts: HashMap<usize, LlmVerdict> = HashMap::new();
    if !delegated.is_empty() {
        let inputs: Vec<UnlabeledSample<'_>> = delegated.iter().map(|&i| aligned[i].unlabeled()).collect();
        let answers = refiner.refine(&inputs)?;
        if answers.len() != delegated.len() {
            return Err(CascadeError::VerdictCount {
                expected: delegated.len(),
                found: answers.len(),
            });
        }
        for (&i, verdict) in delegated.iter().zip(answers) {
            if verdict.sample_id != records[i].sample_id {
                return Err(CascadeError::VerdictOrder {
                    expected: records[i].sample_id.clone(),
                    found: verdict.sample_id,
                });
            }
            cost.add(&verdict);
            verdicts.insert(i, verdict);
        }
    }

    let results = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let base = r.predicted_label.clone();
            let (final_label, source, llm_raw) = match verdicts.remove(&i) {
                None => (base.clone(), Source::Base, None),
                Some(v) => match v.parsed_label {
                    VerdictLabel::Class(label) => (label, Source::Llm, v.raw_text),
                    _ => (base.clone(), Source::LlmFallbackBase, v.raw_text),
                },
            };
            CascadeResult {
                sample_id: r.sample_id.clone(),
                final_label,
                source,
                base_prediction: base,
                uncertainty: r.uncertainty,
                llm_raw,
            }
        })
        .collect();
    Ok(CascadeOutput { results, cost })
}

/// Calibrates on `train` (never reading labels) and runs the cascade on
/// `eval`.
pub fn run_full(
    train: &[PredictionRecord],
    eval: &[PredictionRecord],
    samples: &[ArgumentSample],
    fraction: f64,
    refiner: &dyn Refiner,
) -> Result<(CalibrationProfile, CascadeOutput), CascadeError> {
    let profile = calibrate(train, fraction)?;
    let output = run_cascade(eval, samples, &profile, refiner)?;
    Ok((profile, output))
}

/// The base-only baseline in result form: every record kept.
pub fn base_results(records: &[PredictionRecord]) -> Vec<CascadeResult> {
    records
        .iter()
        .map(|r| CascadeResult {
            sample_id: r.sample_id.clone(),
            final_label: r.predicted_label.clone(),
            source: Source::Base,
            base_prediction: r.predicted_label.clone(),
            uncertainty: r.uncertainty,
            llm_raw: None,
        })
        .collect()
}

pub fn write_results<W: Write>(results: &[CascadeResult], mut writer: W) -> std::io::Result<()> {
    for r in results {
        writeln!(writer, "{}", serde_json::to_string(r)?)?;
    }
    writer.flush()
}

pub fn read_results<R: Read>(stream: R) -> Result<Vec<CascadeResult>, CascadeError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(stream).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| CascadeError::Format {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}
