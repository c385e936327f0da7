// Derive the delegation threshold from base-model confidence and route
// records between the two tiers.
//
//     cargo run --example calibrate_threshold

use std::error::Error;

use argcascade::base_model::{load_predictions, PredictionRecord, ProbabilityVector};
use argcascade::calibration::{calibrate, delegation_count, route, CalibrationProfile, Route};
use argcascade::corpus::LabelScheme;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Prediction files are JSONL: a header, then one probability row per id.
    let file = "\
{\"scheme\":\"ARGSME_BINARY\",\"model\":\"bert-base\"}
{\"id\":\"a\",\"probs\":[0.95,0.05],\"label\":\"PRO\"}
{\"id\":\"b\",\"probs\":[0.40,0.60],\"label\":\"PRO\"}
{\"id\":\"c\",\"probs\":[0.15,0.85],\"label\":\"CON\"}
{\"id\":\"d\",\"probs\":[0.55,0.45],\"label\":\"CON\"}
{\"id\":\"e\",\"probs\":[0.80,0.20],\"label\":\"PRO\"}
";
    let predictions = load_predictions(file.as_bytes())?;
    let records = predictions.records();
    for r in &records {
        println!("{}  predicted {}  uncertainty {:.2}", r.sample_id, r.predicted_label, r.uncertainty);
    }

    let profile = calibrate(&records, 0.4)?;
    println!("profile {}", profile.to_json());
    for (id, r) in route(&records, &profile) {
        println!("  {id} -> {r:?}");
    }

    // Edge fractions use infinite sentinels, written as null.
    let none = CalibrationProfile::from_scores(vec![0.1, 0.2], 0.0)?;
    assert!(!none.delegates(1.0));
    println!("fraction 0: {}", none.to_json());

    // The delegation count is ceil(f * N).
    assert_eq!(delegation_count(0.25, 1149), 288);

    let extra = PredictionRecord::new("f", ProbabilityVector::from_logits(LabelScheme::ArgsmeBinary, &[0.1, 0.0])?);
    let routed = route(&[extra], &profile);
    println!("new record f -> {:?}", routed["f"]);
    assert_eq!(routed["f"], Route::Llm);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
