// The command-line workflow driven in-process: ingest, split, calibrate,
// run with a mock LLM, and report.
//
//     cargo run --example cli_pipeline
//
// The same steps with the binary:
//
//     argcascade ingest us2016 --input pairs.csv --output all.jsonl
//     argcascade split --input all.jsonl --train-out train.jsonl --test-out test.jsonl
//     argcascade run --samples test.jsonl --train-predictions train_preds.jsonl \
//         --eval-predictions test_preds.jsonl --fraction 0.25 --mock-llm oracle --out-dir out

use std::error::Error;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::Path;

use argcascade::base_model::{save_predictions, PredictionFile, PredictionRecord, ProbabilityVector};
use argcascade::cli::run_with;
use argcascade::corpus::{read_interchange, LabelScheme};

fn cli(args: &[&str]) -> Result<(), Box<dyn Error>> {
    println!("$ argcascade {}", args.join(" "));
    let mut out = Vec::new();
    run_with(std::iter::once("argcascade").chain(args.iter().copied()), &mut out)?;
    print!("{}", String::from_utf8(out)?);
    Ok(())
}

/// Stand-in for a trained classifier: confident on even ids, hesitant
/// (and wrong) on every third.
fn write_predictions(samples_path: &Path, out: &Path) -> Result<(), Box<dyn Error>> {
    let scheme = LabelScheme::Us2016Quaternary;
    let mut file = PredictionFile::new(scheme, "demo");
    for (i, s) in read_interchange(File::open(samples_path)?)?.into_iter().enumerate() {
        let gold = scheme.index_of(&s.gold_label).unwrap();
        let (label, confidence) = if i % 3 == 0 {
            ((gold + 1) % 4, 0.3 + (i % 5) as f64 * 0.03)
        } else {
            (gold, 0.6 + (i % 7) as f64 * 0.05)
        };
        let mut probs = vec![(1.0 - confidence) / 3.0; 4];
        probs[label] = confidence;
        file.records.insert(s.id.clone(), PredictionRecord::new(s.id, ProbabilityVector::new(scheme, probs)?));
    }
    save_predictions(&file, File::create(out)?)?;
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let mut csv = String::from("id,prop1,prop2,label\n");
    for i in 0..120 {
        let label = ["RA", "CA", "MA", "NO", "NO", "NO"][i % 6];
        writeln!(csv, "p{i},Proposition {i},Proposition {},{label}", i + 1)?;
    }
    fs::write(p("pairs.csv"), csv)?;

    cli(&["ingest", "us2016", "--input", &p("pairs.csv"), "--output", &p("all.jsonl"), "--expect-total", "120"])?;
    cli(&["split", "--input", &p("all.jsonl"), "--train-out", &p("train.jsonl"), "--test-out", &p("test.jsonl")])?;
    write_predictions(Path::new(&p("train.jsonl")), Path::new(&p("train_preds.jsonl")))?;
    write_predictions(Path::new(&p("test.jsonl")), Path::new(&p("test_preds.jsonl")))?;
    cli(&["calibrate", "--predictions", &p("train_preds.jsonl"), "--fraction", "0.25"])?;
    cli(&[
        "run", "--samples", &p("test.jsonl"), "--train-predictions", &p("train_preds.jsonl"),
        "--eval-predictions", &p("test_preds.jsonl"), "--fraction", "0.25", "--mock-llm", "oracle",
        "--out-dir", &p("out"),
    ])?;
    cli(&["report", "--results", &p("out/results.jsonl"), "--samples", &p("test.jsonl")])?;
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
