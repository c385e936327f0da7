//! Shared fixtures: reference corpus statistics, raw-format corpus
//! generators and synthetic prediction sets.
#![allow(dead_code)]

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use argcascade::base_model::{PredictionFile, PredictionRecord, ProbabilityVector};
use argcascade::corpus::{ArgumentSample, LabelScheme};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// (portal, premises, PRO, CON, conclusions)
pub const ARGSME_PORTALS: [(&str, usize, usize, usize, usize); 3] = [
    ("idebate", 13248, 6701, 6547, 5011),
    ("debatepedia", 21197, 15791, 5406, 10314),
    ("debatewise", 14353, 8514, 5839, 5992),
];

/// (topic, NON, PRO, CON)
pub const UKP_TOPIC_COUNTS: [(&str, usize, usize, usize); 8] = [
    ("abortion", 2282, 634, 766),
    ("cloning", 1472, 702, 825),
    ("death penalty", 1918, 424, 1036),
    ("marijuana legalization", 1160, 535, 574),
    ("gun control", 1846, 775, 650),
    ("minimum wage", 1323, 564, 541),
    ("nuclear energy", 2051, 591, 831),
    ("school uniforms", 1734, 545, 729),
];

/// (label, count); total 12392, split 11243 / 1149.
pub const US2016_COUNTS: [(&str, usize); 4] = [("RA", 2744), ("CA", 888), ("MA", 705), ("NO", 8055)];
pub const US2016_TRAIN: usize = 11243;
pub const US2016_TEST: usize = 1149;

fn shuffled_labels(counts: &[(&str, usize)], seed: u64) -> Vec<String> {
    let mut labels: Vec<String> = counts
        .iter()
        .flat_map(|(l, n)| std::iter::repeat_n(l.to_string(), *n))
        .collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    labels
}

/// Args.me argument objects for one portal, one premise each, spread over
/// `conclusions` debates.
pub fn argsme_records(portal: &str, pro: usize, con: usize, conclusions: usize) -> Vec<String> {
    let labels = shuffled_labels(&[("PRO", pro), ("CON", con)], 11);
    labels
        .iter()
        .enumerate()
        .map(|(i, stance)| {
            let debate = i % conclusions.max(1);
            serde_json::json!({
                "id": format!("{portal}-{debate:05}-{i:06}"),
                "conclusion": format!("Motion number {debate} on {portal} should pass"),
                "premises": [{"text": format!("Premise {i} from {portal} about motion {debate}."), "stance": stance, "annotations": []}],
                "context": {"sourceDomain": format!("{portal}.org"), "sourceUrl": format!("https://{portal}.org/debate/{debate}")}
            })
            .to_string()
        })
        .collect()
}

/// Wraps argument objects in the `{"arguments": [...]}` layout.
pub fn argsme_document(records: &[String]) -> String {
    format!("{{\"arguments\": [\n{}\n]}}\n", records.join(",\n"))
}

/// The three studied portals plus a handful of debate.org arguments that
/// ingestion must filter out.
pub fn argsme_corpus() -> String {
    let mut records = Vec::new();
    for (portal, _, pro, con, conclusions) in ARGSME_PORTALS {
        records.extend(argsme_records(portal, pro, con, conclusions));
    }
    records.extend(argsme_records("debate", 50, 50, 10));
    argsme_document(&records)
}

pub fn ukp_topic_tsv(topic: &str, non: usize, pro: usize, con: usize) -> String {
    let labels = shuffled_labels(
        &[("NoArgument", non), ("Argument_for", pro), ("Argument_against", con)],
        17,
    );
    let mut out = String::from("topic\tretrievedUrl\tarchivedUrl\tsentenceHash\tsentence\tannotation\tset\n");
    for (i, label) in labels.iter().enumerate() {
        let set = match i % 10 {
            0 => "test",
            1 => "val",
            _ => "train",
        };
        let _ = writeln!(
            out,
            "{topic}\thttp://example.org/{i}\thttp://archive.org/{i}\t{i:08x}\tSentence {i} about {topic}, \"quoted\" text.\t{label}\t{set}"
        );
    }
    out
}

pub fn us2016_csv(counts: &[(&str, usize)]) -> String {
    let labels = shuffled_labels(counts, 23);
    let mut out = String::from("id,prop1,prop2,label\n");
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "pair-{i},\"Proposition {i}, first half\",\"Proposition {i} \"\"second\"\"\",{label}"
        );
    }
    out
}

/// Synthetic cascade inputs: samples with gold labels and base predictions
/// with distinct uncertainties. Roughly `accuracy` of the base predictions
/// are correct, and errors skew towards uncertain records.
pub struct Synthetic {
    pub samples: Vec<ArgumentSample>,
    pub file: PredictionFile,
}

impl Synthetic {
    pub fn records(&self) -> Vec<PredictionRecord> {
        self.file.records()
    }

    pub fn gold(&self) -> HashMap<String, String> {
        self.samples
            .iter()
            .map(|s| (s.id.clone(), s.gold_label.clone()))
            .collect()
    }
}

pub fn synthetic(n: usize, scheme: LabelScheme, accuracy: f64, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = scheme.num_classes();
    let mut file = PredictionFile::new(scheme, "synthetic");
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("x{i:05}");
        let gold = rng.random_range(0..k);
        let confidence: f64 = rng.random_range((1.0 / k as f64 + 0.01)..0.999);
        let correct = rng.random_bool((accuracy * (0.5 + confidence)).clamp(0.0, 1.0));
        let predicted = if correct || k == 1 {
            gold
        } else {
            (gold + rng.random_range(1..k)) % k
        };
        let rest = (1.0 - confidence) / (k - 1) as f64;
        let probs: Vec<f64> = (0..k).map(|c| if c == predicted { confidence } else { rest }).collect();
        let probs = ProbabilityVector::new(scheme, probs).expect("valid simplex");
        file.records.insert(id.clone(), PredictionRecord::new(id.clone(), probs));
        file.gold.insert(id.clone(), scheme.classes()[gold].to_string());
        samples.push(ArgumentSample {
            id,
            corpus: "synthetic".into(),
            topic: "abortion".into(),
            claim_text: format!("Synthetic claim number {i}."),
            thesis_text: match scheme {
                LabelScheme::UkpTernary => None,
                _ => Some(format!("Synthetic thesis {}.", i % 7)),
            },
            gold_label: scheme.classes()[gold].to_string(),
            scheme,
        });
    }
    Synthetic { samples, file }
}
