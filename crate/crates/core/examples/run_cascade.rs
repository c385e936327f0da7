// End to end with an offline refiner: calibrate on train predictions, run the
// cascade on eval, score it against the base tier.
//
//     cargo run --example run_cascade

use std::collections::HashMap;
use std::error::Error;

use argcascade::base_model::{PredictionFile, PredictionRecord, ProbabilityVector};
use argcascade::cascade::{base_results, run_full, Source};
use argcascade::corpus::{ArgumentSample, LabelScheme};
use argcascade::metrics::{compare, evaluate};
use argcascade::refiner::LabelReplyRefiner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A toy base model: right most of the time, and least sure when wrong.
fn simulate(n: usize, seed: u64) -> (Vec<ArgumentSample>, PredictionFile) {
    let scheme = LabelScheme::ArgsmeBinary;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut file = PredictionFile::new(scheme, "toy-bert");
    let mut samples = Vec::new();
    for i in 0..n {
        let gold = rng.random_range(0..2);
        let wrong = rng.random_bool(0.25);
        let confidence = if wrong { rng.random_range(0.5..0.7) } else { rng.random_range(0.55..0.99) };
        let predicted = if wrong { 1 - gold } else { gold };
        let mut probs = vec![1.0 - confidence; 2];
        probs[predicted] = confidence;
        let id = format!("arg-{i}");
        file.records.insert(id.clone(), PredictionRecord::new(id.clone(), ProbabilityVector::new(scheme, probs).unwrap()));
        samples.push(ArgumentSample {
            id,
            corpus: "toy".into(),
            topic: "school uniforms".into(),
            claim_text: format!("Claim number {i} about uniforms."),
            thesis_text: Some("Schools should require uniforms".into()),
            gold_label: scheme.classes()[gold].to_string(),
            scheme,
        });
    }
    (samples, file)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (_, train) = simulate(1000, 1);
    let (samples, eval) = simulate(400, 2);
    let gold: HashMap<String, String> = samples.iter().map(|s| (s.id.clone(), s.gold_label.clone())).collect();

    // The oracle stand-in answers with the gold label: an upper bound on
    // what a refiner can add at this fraction.
    let refiner = LabelReplyRefiner::new("oracle", gold.clone());
    let (profile, output) = run_full(&train.records(), &eval.records(), &samples, 0.2, &refiner)?;
    println!("gamma {:.4}, routed {} of {}", profile.gamma(),
        output.results.iter().filter(|r| r.source == Source::Llm).count(), output.results.len());

    let base = evaluate(&base_results(&eval.records()), &gold, LabelScheme::ArgsmeBinary)?;
    let cascade = evaluate(&output.results, &gold, LabelScheme::ArgsmeBinary)?.with_cost(output.cost);
    println!("base\n{}", base.to_table());
    println!("cascade\n{}", cascade.to_table());
    println!("delta\n{}", compare(&base, &cascade)?.to_table());
    assert!(cascade.top1 >= base.top1);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
