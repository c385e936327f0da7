//! Corpus ingestion for the three argument-mining datasets.
//!
//! Every parser yields [`ArgumentSample`]s in one normalized shape. The
//! interchange format (one JSON object per line) is the common currency
//! between ingestion, the base-model trainer and the cascade.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("record {ordinal}: malformed record: {message}")]
    MalformedRecord { ordinal: usize, message: String },
    #[error("record {ordinal}: unknown stance `{value}`")]
    UnknownStance { ordinal: usize, value: String },
    #[error("unknown UKP topic `{0}`")]
    UnknownTopic(String),
    #[error("line {line}: unknown annotation `{value}`")]
    UnknownAnnotation { line: usize, value: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: label `{value}` is not one of {allowed}")]
    UnknownLabel { line: usize, value: String, allowed: String },
    #[error("line {line}: missing text in `{field}`")]
    MissingText { line: usize, field: &'static str },
    #[error("line {line}: {message}")]
    Interchange { line: usize, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
}

/// The three label inventories used across the corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelScheme {
    #[serde(rename = "ARGSME_BINARY")]
    ArgsmeBinary,
    #[serde(rename = "UKP_TERNARY")]
    UkpTernary,
    #[serde(rename = "US2016_QUATERNARY")]
    Us2016Quaternary,
}

impl LabelScheme {
    pub const ALL: [LabelScheme; 3] = [
        LabelScheme::ArgsmeBinary,
        LabelScheme::UkpTernary,
        LabelScheme::Us2016Quaternary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LabelScheme::ArgsmeBinary => "ARGSME_BINARY",
            LabelScheme::UkpTernary => "UKP_TERNARY",
            LabelScheme::Us2016Quaternary => "US2016_QUATERNARY",
        }
    }

    /// Class names in their fixed order. Index positions align with
    /// probability vectors.
    pub fn classes(self) -> &'static [&'static str] {
        match self {
            LabelScheme::ArgsmeBinary => &["PRO", "CON"],
            LabelScheme::UkpTernary => &["NON", "PRO", "CON"],
            LabelScheme::Us2016Quaternary => &["RA", "CA", "MA", "NO"],
        }
    }

    pub fn num_classes(self) -> usize {
        self.classes().len()
    }

    pub fn index_of(self, label: &str) -> Option<usize> {
        self.classes().iter().position(|c| *c == label)
    }

    pub fn contains(self, label: &str) -> bool {
        self.index_of(label).is_some()
    }

    /// Case-insensitive lookup returning the canonical class name.
    pub fn canonical(self, label: &str) -> Option<&'static str> {
        let label = label.trim();
        self.classes()
            .iter()
            .copied()
            .find(|c| c.eq_ignore_ascii_case(label))
    }
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LabelScheme::ALL
            .into_iter()
            .find(|scheme| scheme.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown label scheme `{s}`"))
    }
}

/// One normalized argument instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentSample {
    pub id: String,
    pub corpus: String,
    pub topic: String,
    #[serde(rename = "claim")]
    pub claim_text: String,
    #[serde(rename = "thesis")]
    pub thesis_text: Option<String>,
    #[serde(rename = "label")]
    pub gold_label: String,
    pub scheme: LabelScheme,
}

/// Label-free view of a sample: everything the refiner may see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnlabeledSample<'a> {
    pub id: &'a str,
    pub topic: &'a str,
    pub claim_text: &'a str,
    pub thesis_text: Option<&'a str>,
    pub scheme: LabelScheme,
}

impl ArgumentSample {
    pub fn unlabeled(&self) -> UnlabeledSample<'_> {
        UnlabeledSample {
            id: &self.id,
            topic: &self.topic,
            claim_text: &self.claim_text,
            thesis_text: self.thesis_text.as_deref(),
            scheme: self.scheme,
        }
    }

    fn check(&self, line: usize) -> Result<(), CorpusError> {
        if self.claim_text.trim().is_empty() {
            return Err(CorpusError::MissingText { line, field: "claim" });
        }
        if !self.scheme.contains(&self.gold_label) {
            return Err(CorpusError::UnknownLabel {
                line,
                value: self.gold_label.clone(),
                allowed: self.scheme.classes().join("/"),
            });
        }
        Ok(())
    }
}

/// Trims surrounding whitespace and unifies line endings to `\n`.
pub fn normalize_text(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n").trim().to_string()
}

/// Whether Args.me premises are paired with their conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgsmeCondition {
    WithConclusion,
    WithoutConclusion,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ArgsmeRecord {
    Nested {
        #[serde(default)]
        id: Option<String>,
        conclusion: String,
        premises: Vec<ArgsmePremise>,
        #[serde(default)]
        context: Option<ArgsmeContext>,
    },
    Flat {
        #[serde(default)]
        id: Option<String>,
        conclusion: String,
        premise: String,
        stance: String,
        #[serde(default)]
        portal: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
struct ArgsmePremise {
    text: String,
    stance: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ArgsmeContext {
    #[serde(default)]
    source_domain: Option<String>,
    #[serde(default)]
    source_url: Option<String>,
}

impl ArgsmeContext {
    fn portal(&self) -> Option<String> {
        if let Some(domain) = &self.source_domain {
            return Some(portal_name(domain));
        }
        let url = self.source_url.as_deref()?;
        let host = url.split("://").nth(1).unwrap_or(url).split('/').next()?;
        Some(portal_name(host))
    }
}

/// Reduces a host or domain (`www.idebate.org`) to a portal name (`idebate`).
pub fn portal_name(domain: &str) -> String {
    let domain = domain.trim().to_ascii_lowercase();
    let domain = domain.strip_prefix("www.").unwrap_or(&domain);
    domain.split('.').next().unwrap_or(domain).to_string()
}

/// Parses Args.me records: a `{"arguments": [...]}` document, a bare JSON
/// array, or one argument object per line. One sample per premise.
pub fn parse_argsme<R: Read>(
    mut stream: R,
    condition: ArgsmeCondition,
) -> Result<Vec<ArgumentSample>, CorpusError> {
    let mut text = String::new();
    stream.read_to_string(&mut text)?;
    let text = text.trim_start_matches('\u{feff}');
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }

    let records: Vec<serde_json::Value> = match serde_json::from_str::<serde_json::Value>(text) {
        Ok(serde_json::Value::Object(mut doc)) if doc.contains_key("arguments") => {
            match doc.remove("arguments") {
                Some(serde_json::Value::Array(items)) => items,
                _ => {
                    return Err(CorpusError::MalformedRecord {
                        ordinal: 0,
                        message: "`arguments` is not an array".into(),
                    })
                }
            }
        }
        Ok(serde_json::Value::Array(items)) => items,
        _ => text
            .lines()
            .enumerate()
            .filter(|(_, line)| !line.trim().is_empty())
            .map(|(i, line)| {
                serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
                    ordinal: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?,
    };

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, value) in records.into_iter().enumerate() {
        let ordinal = i + 1;
        let record: ArgsmeRecord =
            serde_json::from_value(value).map_err(|e| CorpusError::MalformedRecord {
                ordinal,
                message: e.to_string(),
            })?;
        let (id, conclusion, premises, portal) = match record {
            ArgsmeRecord::Nested {
                id,
                conclusion,
                premises,
                context,
            } => (
                id,
                conclusion,
                premises
                    .into_iter()
                    .map(|p| (p.text, p.stance))
                    .collect::<Vec<_>>(),
                context.unwrap_or_default().portal(),
            ),
            ArgsmeRecord::Flat {
                id,
                conclusion,
                premise,
                stance,
                portal,
            } => (id, conclusion, vec![(premise, stance)], portal.map(|p| portal_name(&p))),
        };
        if premises.is_empty() {
            return Err(CorpusError::MalformedRecord {
                ordinal,
                message: "record has no premises".into(),
            });
        }
        let base_id = id.unwrap_or_else(|| format!("argsme-{ordinal}"));
        let corpus = match &portal {
            Some(p) => format!("args.me/{p}"),
            None => "args.me".to_string(),
        };
        let conclusion = normalize_text(&conclusion);
        let multi = premises.len() > 1;
        for (j, (text, stance)) in premises.into_iter().enumerate() {
            let label = LabelScheme::ArgsmeBinary
                .canonical(&stance)
                .ok_or_else(|| CorpusError::UnknownStance {
                    ordinal,
                    value: stance.clone(),
                })?;
            let claim = normalize_text(&text);
            if claim.is_empty() {
                return Err(CorpusError::MalformedRecord {
                    ordinal,
                    message: "empty premise text".into(),
                });
            }
            let id = if multi {
                format!("{base_id}#{j}")
            } else {
                base_id.clone()
            };
            if !seen.insert(id.clone()) {
                return Err(CorpusError::DuplicateId(id));
            }
            let thesis = match condition {
                ArgsmeCondition::WithConclusion => {
                    if conclusion.is_empty() {
                        return Err(CorpusError::MalformedRecord {
                            ordinal,
                            message: "empty conclusion".into(),
                        });
                    }
                    Some(conclusion.clone())
                }
                ArgsmeCondition::WithoutConclusion => None,
            };
            samples.push(ArgumentSample {
                id,
                corpus: corpus.clone(),
                topic: conclusion.clone(),
                claim_text: claim,
                thesis_text: thesis,
                gold_label: label.to_string(),
                scheme: LabelScheme::ArgsmeBinary,
            });
        }
    }
    Ok(samples)
}

/// The eight UKP sentential topics.
pub const UKP_TOPICS: [&str; 8] = [
    "abortion",
    "cloning",
    "death penalty",
    "gun control",
    "marijuana legalization",
    "minimum wage",
    "nuclear energy",
    "school uniforms",
];

/// Canonical UKP topic name; accepts `_` or `-` in place of spaces.
pub fn ukp_topic(name: &str) -> Result<&'static str, CorpusError> {
    let wanted = name.trim().to_ascii_lowercase().replace(['_', '-'], " ");
    UKP_TOPICS
        .iter()
        .copied()
        .find(|t| *t == wanted)
        .ok_or_else(|| CorpusError::UnknownTopic(name.to_string()))
}

const UKP_COLUMNS: [&str; 7] = [
    "topic",
    "retrievedUrl",
    "archivedUrl",
    "sentenceHash",
    "sentence",
    "annotation",
    "set",
];

fn ukp_label(annotation: &str) -> Option<&'static str> {
    match annotation.trim().to_ascii_lowercase().as_str() {
        "noargument" => Some("NON"),
        "argument_for" => Some("PRO"),
        "argument_against" => Some("CON"),
        _ => None,
    }
}

/// Parses one UKP topic file (tab separated). A header row is optional;
/// without one the standard seven-column layout is assumed.
pub fn parse_ukp<R: Read>(stream: R, topic: &str) -> Result<Vec<ArgumentSample>, CorpusError> {
    let topic = ukp_topic(topic)?;
    let slug = topic.replace(' ', "_");
    let reader = BufReader::new(stream);

    let mut columns: Option<(usize, usize, usize)> = None;
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if columns.is_none() {
            let header: Vec<String> = fields.iter().map(|f| f.trim().to_string()).collect();
            let sentence = header.iter().position(|h| h == "sentence");
            let annotation = header.iter().position(|h| h == "annotation");
            if let (Some(s), Some(a)) = (sentence, annotation) {
                columns = Some((header.len(), s, a));
                continue;
            }
            columns = Some((UKP_COLUMNS.len(), 4, 5));
        }
        let (width, sentence_col, annotation_col) = columns.expect("layout fixed above");
        if fields.len() != width {
            return Err(CorpusError::ColumnCount {
                line: line_no,
                expected: width,
                found: fields.len(),
            });
        }
        let annotation = fields[annotation_col];
        let label = ukp_label(annotation).ok_or_else(|| CorpusError::UnknownAnnotation {
            line: line_no,
            value: annotation.to_string(),
        })?;
        let claim = normalize_text(fields[sentence_col]);
        if claim.is_empty() {
            return Err(CorpusError::MissingText {
                line: line_no,
                field: "sentence",
            });
        }
        samples.push(ArgumentSample {
            id: format!("ukp/{slug}/{line_no}"),
            corpus: "ukp".into(),
            topic: topic.to_string(),
            claim_text: claim,
            thesis_text: None,
            gold_label: label.to_string(),
            scheme: LabelScheme::UkpTernary,
        });
    }
    Ok(samples)
}

#[derive(Debug, Serialize, Deserialize)]
struct Us2016Row {
    id: String,
    prop1: String,
    prop2: String,
    label: String,
}

/// Parses the US2016 interchange CSV (`id,prop1,prop2,label`).
pub fn parse_us2016<R: Read>(stream: R) -> Result<Vec<ArgumentSample>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(stream);
    let scheme = LabelScheme::Us2016Quaternary;
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.deserialize::<Us2016Row>() {
        let row = row?;
        // header is line 1
        let line = samples.len() + 2;
        let label = scheme
            .canonical(&row.label)
            .ok_or_else(|| CorpusError::UnknownLabel {
                line,
                value: row.label.clone(),
                allowed: scheme.classes().join("/"),
            })?;
        let claim = normalize_text(&row.prop1);
        let thesis = normalize_text(&row.prop2);
        if claim.is_empty() {
            return Err(CorpusError::MissingText { line, field: "prop1" });
        }
        if thesis.is_empty() {
            return Err(CorpusError::MissingText { line, field: "prop2" });
        }
        let id = row.id.trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        samples.push(ArgumentSample {
            id,
            corpus: "us2016".into(),
            topic: "us2016".into(),
            claim_text: claim,
            thesis_text: Some(thesis),
            gold_label: label.to_string(),
            scheme,
        });
    }
    Ok(samples)
}

/// Writes US2016 samples back out as interchange CSV.
pub fn write_us2016<W: Write>(samples: &[ArgumentSample], writer: W) -> Result<(), CorpusError> {
    let mut out = csv::Writer::from_writer(writer);
    for s in samples {
        out.serialize(Us2016Row {
            id: s.id.clone(),
            prop1: s.claim_text.clone(),
            prop2: s.thesis_text.clone().unwrap_or_default(),
            label: s.gold_label.clone(),
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Serializes samples as interchange JSONL.
pub fn write_interchange<W: Write>(
    samples: &[ArgumentSample],
    mut writer: W,
) -> Result<(), CorpusError> {
    for s in samples {
        let line = serde_json::to_string(s).expect("samples always serialize");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads interchange JSONL, validating labels, texts and id uniqueness.
pub fn read_interchange<R: Read>(stream: R) -> Result<Vec<ArgumentSample>, CorpusError> {
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(stream).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: ArgumentSample =
            serde_json::from_str(&line).map_err(|e| CorpusError::Interchange {
                line: line_no,
                message: e.to_string(),
            })?;
        sample.check(line_no)?;
        if !seen.insert(sample.id.clone()) {
            return Err(CorpusError::DuplicateId(sample.id));
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// Train/test partition parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.9,
            seed: 42,
            stratified: true,
        }
    }
}

/// Deterministic train/test partition. Both halves keep input order.
///
/// In stratified mode each class contributes `floor(f * n_c)` samples plus
/// at most one more, handed out by largest remainder so that the train size
/// is exactly `round(f * N)`.
pub fn split(
    samples: &[ArgumentSample],
    spec: &SplitSpec,
) -> Result<(Vec<ArgumentSample>, Vec<ArgumentSample>), CorpusError> {
    if samples.is_empty() {
        return Err(CorpusError::InvalidSplit("no samples to split".into()));
    }
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(CorpusError::InvalidSplit(format!(
            "train fraction {f} outside (0, 1)"
        )));
    }
    let n = samples.len();
    let target = (f * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut in_train = vec![false; n];
    if spec.stratified {
        let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, s) in samples.iter().enumerate() {
            by_class.entry(s.gold_label.as_str()).or_default().push(i);
        }
        if let Some((label, _)) = by_class.iter().find(|(_, idx)| idx.len() < 2) {
            return Err(CorpusError::InvalidSplit(format!(
                "class `{label}` has a single member; stratification needs at least two"
            )));
        }
        let mut quotas: Vec<(usize, f64)> = by_class
            .values()
            .map(|idx| {
                let exact = f * idx.len() as f64;
                (exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let assigned: usize = quotas.iter().map(|q| q.0).sum();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| quotas[b].1.total_cmp(&quotas[a].1).then(a.cmp(&b)));
        for &c in order.iter().take(target.saturating_sub(assigned)) {
            quotas[c].0 += 1;
        }
        for (idx, (quota, _)) in by_class.into_values().zip(quotas) {
            let mut idx = idx;
            idx.shuffle(&mut rng);
            for &i in &idx[..quota] {
                in_train[i] = true;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for &i in &idx[..target] {
            in_train[i] = true;
        }
    }

    let (train, test): (Vec<_>, Vec<_>) = samples
        .iter()
        .zip(in_train)
        .partition(|(_, train)| *train);
    Ok((
        train.into_iter().map(|(s, _)| s.clone()).collect(),
        test.into_iter().map(|(s, _)| s.clone()).collect(),
    ))
}

/// Per-class counts, every class of the scheme present (zeros included).
pub fn class_distribution(samples: &[ArgumentSample], scheme: LabelScheme) -> IndexMap<String, usize> {
    let mut counts: IndexMap<String, usize> = scheme
        .classes()
        .iter()
        .map(|c| (c.to_string(), 0))
        .collect();
    for s in samples {
        *counts.entry(s.gold_label.clone()).or_insert(0) += 1;
    }
    counts
}
