// Query a base classifier served over HTTP (`POST /predict`), with
// batching, bounded parallelism, retries and a per-id cache.
//
//     cargo run --example http_base_model

use std::error::Error;
use std::time::Duration;

use argcascade::base_model::{save_predictions, BaseModel, HttpBaseModel, PredictionFile};
use argcascade::corpus::{ArgumentSample, LabelScheme};
use argcascade::http::RetryPolicy;
use argcascade::mock_server::{MockResponse, ScriptedServer};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Stand-in inference server: first answer is a transient 503.
    let server = ScriptedServer::start([MockResponse::new(503, "warming up")], |req| {
        let body = req.json().unwrap_or_default();
        let probs: Vec<[f64; 3]> = body["texts"]
            .as_array()
            .map(|texts| {
                texts
                    .iter()
                    .map(|t| match t.as_str().unwrap_or_default().len() % 3 {
                        0 => [0.7, 0.2, 0.1],
                        1 => [0.1, 0.8, 0.1],
                        _ => [0.2, 0.3, 0.5],
                    })
                    .collect()
            })
            .unwrap_or_default();
        MockResponse::json(serde_json::json!({ "probs": probs }))
    })?;

    let scheme = LabelScheme::UkpTernary;
    let samples: Vec<ArgumentSample> = (0..10)
        .map(|i| ArgumentSample {
            id: format!("ukp/cloning/{i}"),
            corpus: "ukp".into(),
            topic: "cloning".into(),
            claim_text: format!("Cloning sentence {}", "x".repeat(i)),
            thesis_text: None,
            gold_label: "NON".into(),
            scheme,
        })
        .collect();

    let model = HttpBaseModel::new(&server.url(), scheme, "bert-ukp")
        .with_batch_size(4)
        .with_parallelism(2)
        .with_retry(RetryPolicy::new(3).with_base_delay(Duration::from_millis(10)));
    let records = model.predict(&samples)?;
    println!("{} records from {} HTTP requests", records.len(), model.request_count());

    // Persist as a prediction file for the cascade.
    let mut file = PredictionFile::new(scheme, model.identity());
    for r in records {
        file.records.insert(r.sample_id.clone(), r);
    }
    let mut out = Vec::new();
    save_predictions(&file, &mut out)?;
    print!("{}", String::from_utf8(out)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
