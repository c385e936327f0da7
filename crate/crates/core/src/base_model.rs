//! Base classifier contract and its two adapters.
//!
//! The compact transformer classifier is opaque here: all the cascade
//! needs is a probability vector per sample. Predictions arrive either from
//! a JSONL file written by the trainer or from an HTTP inference endpoint.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::uncertainty;
use crate::corpus::{ArgumentSample, LabelScheme};
use crate::http::{self, HttpError, RetryPolicy};

/// Tolerance on `sum(p) == 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BaseModelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("expected {expected} probabilities for {scheme}, got {found}")]
    ClassCount {
        scheme: LabelScheme,
        expected: usize,
        found: usize,
    },
    #[error("probability {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1 (tolerance {SIMPLEX_TOLERANCE})")]
    NotNormalized { sum: f64 },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: Box<BaseModelError>,
    },
    #[error("duplicate prediction id `{0}`")]
    DuplicateId(String),
    #[error("prediction file has no header line")]
    MissingHeader,
    #[error("no prediction for sample `{0}`")]
    UnknownSample(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("inference endpoint returned {found} vectors for a batch of {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("malformed inference response: {0}")]
    Response(String),
}

/// A validated point on the probability simplex, aligned with
/// `scheme.classes()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    scheme: LabelScheme,
    probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(scheme: LabelScheme, probs: Vec<f64>) -> Result<Self, BaseModelError> {
        if probs.len() != scheme.num_classes() {
            return Err(BaseModelError::ClassCount {
                scheme,
                expected: scheme.num_classes(),
                found: probs.len(),
            });
        }
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(BaseModelError::OutOfRange { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(BaseModelError::NotNormalized { sum });
        }
        Ok(ProbabilityVector { scheme, probs })
    }

    /// Softmax over raw logits.
    pub fn from_logits(scheme: LabelScheme, logits: &[f64]) -> Result<Self, BaseModelError> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        ProbabilityVector::new(scheme, exps.into_iter().map(|e| e / total).collect())
    }

    pub fn scheme(&self) -> LabelScheme {
        self.scheme
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn predicted_label(&self) -> &'static str {
        self.scheme.classes()[self.argmax()]
    }
}

/// Base-model output for one sample. Carries no gold label.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub probs: ProbabilityVector,
    pub predicted_label: String,
    pub uncertainty: f64,
}

impl PredictionRecord {
    pub fn new(sample_id: impl Into<String>, probs: ProbabilityVector) -> Self {
        PredictionRecord {
            sample_id: sample_id.into(),
            predicted_label: probs.predicted_label().to_string(),
            uncertainty: uncertainty(&probs),
            probs,
        }
    }

    pub fn scheme(&self) -> LabelScheme {
        self.probs.scheme()
    }
}

/// The base tier of the cascade.
pub trait BaseModel {
    fn identity(&self) -> &str;
    fn scheme(&self) -> LabelScheme;
    /// One record per sample, in input order.
    fn predict(&self, samples: &[ArgumentSample]) -> Result<Vec<PredictionRecord>, BaseModelError>;
}

#[derive(Debug, Serialize, Deserialize)]
struct FileHeader {
    scheme: LabelScheme,
    model: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileRow {
    id: String,
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

/// Contents of a prediction file: the records plus any gold labels it
/// carried, kept apart so routing never sees them.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub scheme: LabelScheme,
    pub model: String,
    pub records: IndexMap<String, PredictionRecord>,
    pub gold: HashMap<String, String>,
}

impl PredictionFile {
    pub fn new(scheme: LabelScheme, model: impl Into<String>) -> Self {
        PredictionFile {
            scheme,
            model: model.into(),
            records: IndexMap::new(),
            gold: HashMap::new(),
        }
    }

    pub fn records(&self) -> Vec<PredictionRecord> {
        self.records.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl BaseModel for PredictionFile {
    fn identity(&self) -> &str {
        &self.model
    }

    fn scheme(&self) -> LabelScheme {
        self.scheme
    }

    fn predict(&self, samples: &[ArgumentSample]) -> Result<Vec<PredictionRecord>, BaseModelError> {
        samples
            .iter()
            .map(|s| {
                self.records
                    .get(&s.id)
                    .cloned()
                    .ok_or_else(|| BaseModelError::UnknownSample(s.id.clone()))
            })
            .collect()
    }
}

/// Reads a prediction JSONL file: a header line, then one row per sample.
pub fn load_predictions<R: Read>(stream: R) -> Result<PredictionFile, BaseModelError> {
    let mut lines = BufReader::new(stream)
        .lines()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Ok(l) if l.trim().is_empty()));

    let (_, header) = lines.next().ok_or(BaseModelError::MissingHeader)?;
    let header: FileHeader =
        serde_json::from_str(&header?).map_err(|e| BaseModelError::Format {
            line: 1,
            message: format!("bad header: {e}"),
        })?;
    let mut file = PredictionFile::new(header.scheme, header.model);

    for (i, line) in lines {
        let line_no = i + 1;
        let row: FileRow = serde_json::from_str(&line?).map_err(|e| BaseModelError::Format {
            line: line_no,
            message: e.to_string(),
        })?;
        let wrap = |source| BaseModelError::Record {
            line: line_no,
            source: Box::new(source),
        };
        let probs = ProbabilityVector::new(file.scheme, row.probs).map_err(wrap)?;
        if file.records.contains_key(&row.id) {
            return Err(BaseModelError::DuplicateId(row.id));
        }
        if let Some(label) = row.label {
            let canonical = file.scheme.canonical(&label).ok_or_else(|| BaseModelError::Format {
                line: line_no,
                message: format!("gold label `{label}` not in {}", file.scheme),
            })?;
            file.gold.insert(row.id.clone(), canonical.to_string());
        }
        file.records
            .insert(row.id.clone(), PredictionRecord::new(row.id, probs));
    }
    Ok(file)
}

pub fn save_predictions<W: Write>(file: &PredictionFile, mut writer: W) -> Result<(), BaseModelError> {
    let header = FileHeader {
        scheme: file.scheme,
        model: file.model.clone(),
    };
    writeln!(writer, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for (id, record) in &file.records {
        let row = FileRow {
            id: id.clone(),
            probs: record.probs.probs().to_vec(),
            label: file.gold.get(id).cloned(),
        };
        writeln!(writer, "{}", serde_json::to_string(&row).expect("row serializes"))?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct InferenceRequest<'a> {
    texts: Vec<&'a str>,
    theses: Vec<Option<&'a str>>,
}

#[derive(Debug, Deserialize)]
struct InferenceResponse {
    probs: Vec<Vec<f64>>,
}

type ChunkResult = Result<Vec<ProbabilityVector>, BaseModelError>;

/// Client for a remote inference server speaking `POST /predict`.
///
/// Predictions are cached by sample id for the lifetime of the client.
pub struct HttpBaseModel {
    model: String,
    scheme: LabelScheme,
    url: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
    batch_size: usize,
    parallelism: usize,
    cache: Mutex<HashMap<String, ProbabilityVector>>,
    requests: AtomicUsize,
}

impl HttpBaseModel {
    pub fn new(base_url: &str, scheme: LabelScheme, model: impl Into<String>) -> Self {
        HttpBaseModel {
            model: model.into(),
            scheme,
            url: format!("{}/predict", base_url.trim_end_matches('/')),
            agent: http::agent(Duration::from_secs(60)),
            retry: RetryPolicy::new(3),
            batch_size: 32,
            parallelism: 4,
            cache: Mutex::new(HashMap::new()),
            requests: AtomicUsize::new(0),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    /// HTTP requests sent so far, retries included.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn post_chunk(&self, chunk: &[&ArgumentSample]) -> Result<Vec<ProbabilityVector>, BaseModelError> {
        let request = InferenceRequest {
            texts: chunk.iter().map(|s| s.claim_text.as_str()).collect(),
            theses: chunk.iter().map(|s| s.thesis_text.as_deref()).collect(),
        };
        let body = serde_json::to_value(&request).expect("request serializes");
        let reply = http::post_json(&self.agent, &self.url, None, &body, &self.retry);
        let attempts = match &reply {
            Ok(r) => r.attempts,
            Err(e) => e.attempts(),
        };
        self.requests.fetch_add(attempts as usize, Ordering::Relaxed);
        let response: InferenceResponse = serde_json::from_str(&reply?.body)
            .map_err(|e| BaseModelError::Response(e.to_string()))?;
        if response.probs.len() != chunk.len() {
            return Err(BaseModelError::LengthMismatch {
                expected: chunk.len(),
                found: response.probs.len(),
            });
        }
        response
            .probs
            .into_iter()
            .map(|p| ProbabilityVector::new(self.scheme, p))
            .collect()
    }

    /// Sends uncached samples in batches, at most `parallelism` requests in
    /// flight, and reassembles results by position.
    pub fn predict_http(&self, batch: &[ArgumentSample]) -> Result<Vec<PredictionRecord>, BaseModelError> {
        if batch.is_empty() {
            return Err(BaseModelError::EmptyBatch);
        }
        let pending: Vec<&ArgumentSample> = {
            let cache = self.cache.lock().expect("cache lock");
            let mut seen = HashSet::new();
            batch
                .iter()
                .filter(|s| !cache.contains_key(&s.id) && seen.insert(s.id.as_str()))
                .collect()
        };
        let chunks: Vec<&[&ArgumentSample]> = pending.chunks(self.batch_size).collect();
        let next = AtomicUsize::new(0);
        let outcomes: Mutex<Vec<Option<ChunkResult>>> = Mutex::new((0..chunks.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..self.parallelism.min(chunks.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(chunk) = chunks.get(i) else { break };
                    let result = self.post_chunk(chunk);
                    outcomes.lock().expect("outcome lock")[i] = Some(result);
                });
            }
        });
        let outcomes = outcomes.into_inner().expect("outcome lock");
        {
            let mut cache = self.cache.lock().expect("cache lock");
            for (chunk, outcome) in chunks.iter().zip(outcomes) {
                let vectors = outcome.expect("every chunk processed")?;
                for (sample, probs) in chunk.iter().zip(vectors) {
                    cache.insert(sample.id.clone(), probs);
                }
            }
        }
        let cache = self.cache.lock().expect("cache lock");
        Ok(batch
            .iter()
            .map(|s| PredictionRecord::new(s.id.clone(), cache[&s.id].clone()))
            .collect())
    }
}

impl BaseModel for HttpBaseModel {
    fn identity(&self) -> &str {
        &self.model
    }

    fn scheme(&self) -> LabelScheme {
        self.scheme
    }

    fn predict(&self, samples: &[ArgumentSample]) -> Result<Vec<PredictionRecord>, BaseModelError> {
        self.predict_http(samples)
    }
}
