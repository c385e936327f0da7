// Deterministic, stratified train/test split.
//
//     cargo run --example split_corpus

use std::error::Error;

use argcascade::corpus::{class_distribution, split, ArgumentSample, LabelScheme, SplitSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let scheme = LabelScheme::Us2016Quaternary;
    let samples: Vec<ArgumentSample> = (0..200)
        .map(|i| ArgumentSample {
            id: format!("pair-{i}"),
            corpus: "us2016".into(),
            topic: "us2016".into(),
            claim_text: format!("Proposition {i}"),
            thesis_text: Some(format!("Proposition {}", i + 1)),
            gold_label: match i % 10 {
                0..=1 => "RA",
                2 => "CA",
                3 => "MA",
                _ => "NO",
            }
            .into(),
            scheme,
        })
        .collect();

    let spec = SplitSpec::default();
    let (train, test) = split(&samples, &spec)?;
    println!("train {} / test {} (fraction {}, seed {})", train.len(), test.len(), spec.train_fraction, spec.seed);
    println!("train classes {:?}", class_distribution(&train, scheme));
    println!("test classes  {:?}", class_distribution(&test, scheme));

    let (again, _) = split(&samples, &spec)?;
    assert_eq!(again, train, "same seed, same split");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
