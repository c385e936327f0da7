// Accuracy and LLM spend across a grid of delegation fractions, answered
// from a recorded transcript.
//
//     cargo run --example sweep_fractions

use std::collections::HashMap;
use std::error::Error;

use argcascade::base_model::{PredictionRecord, ProbabilityVector};
use argcascade::calibration::calibrate;
use argcascade::cascade::run_cascade;
use argcascade::corpus::{ArgumentSample, LabelScheme};
use argcascade::metrics::evaluate;
use argcascade::refiner::{canonical_reply, prompt_hash, render_prompt, TranscriptEntry, TranscriptRefiner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let scheme = LabelScheme::Us2016Quaternary;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut samples = Vec::new();
    let mut records = Vec::new();
    for i in 0..300 {
        let gold = rng.random_range(0..4);
        let confidence: f64 = rng.random_range(0.3..0.99);
        let predicted = if rng.random_bool(confidence) { gold } else { (gold + 1) % 4 };
        let mut probs = vec![(1.0 - confidence) / 3.0; 4];
        probs[predicted] = confidence;
        let id = format!("pair-{i}");
        records.push(PredictionRecord::new(id.clone(), ProbabilityVector::new(scheme, probs)?));
        samples.push(ArgumentSample {
            id,
            corpus: "us2016".into(),
            topic: "us2016".into(),
            claim_text: format!("Proposition {i}"),
            thesis_text: Some(format!("Proposition {}", i + 1000)),
            gold_label: scheme.classes()[gold].to_string(),
            scheme,
        });
    }
    let gold: HashMap<String, String> = samples.iter().map(|s| (s.id.clone(), s.gold_label.clone())).collect();

    // A transcript maps sha256(prompt) to a reply. This one was "recorded"
    // from a refiner that is right 90% of the time.
    let mut entries = Vec::new();
    for s in &samples {
        let g = scheme.index_of(&s.gold_label).unwrap();
        let answer = if rng.random_bool(0.9) { g } else { (g + 2) % 4 };
        entries.push(TranscriptEntry {
            prompt_hash: prompt_hash(&render_prompt(s)?),
            reply: canonical_reply(scheme, scheme.classes()[answer]).unwrap().to_string(),
        });
    }
    let refiner = TranscriptRefiner::new(entries);

    println!("fraction  top1    macroF1  llm_calls");
    for step in 0..=10 {
        let f = step as f64 / 10.0;
        let profile = calibrate(&records, f)?;
        let out = run_cascade(&records, &samples, &profile, &refiner)?;
        let report = evaluate(&out.results, &gold, scheme)?;
        println!("{f:<8.1}  {:>6.2}  {:>7.2}  {:>9}", report.top1, report.macro_f1, out.cost.llm_calls);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
