// The LLM tier against a chat-completions endpoint. A local scripted server
// stands in for the real API, including one rate-limit response.
//
//     cargo run --example chat_refiner

use std::error::Error;
use std::time::Duration;

use argcascade::corpus::{ArgumentSample, LabelScheme};
use argcascade::http::RetryPolicy;
use argcascade::mock_server::{MockResponse, ScriptedServer};
use argcascade::refiner::{render_prompt, ChatConfig, ChatRefiner, Refiner};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let server = ScriptedServer::start([MockResponse::new(429, "slow down")], |req| {
        let prompt = req.json().unwrap()["messages"][0]["content"].as_str().unwrap_or_default().to_string();
        if prompt.contains("pollution") {
            MockResponse::chat("The claim is an argument for the thesis.")
        } else {
            MockResponse::chat("This is an argument against the thesis.")
        }
    })?;

    let thesis = "Tunisia should not rely on tourism for economic growth";
    let samples: Vec<ArgumentSample> = [
        "Tourism brings pollution to coastal towns.",
        "Tourism is the largest source of foreign currency.",
    ]
    .iter()
    .enumerate()
    .map(|(i, claim)| ArgumentSample {
        id: format!("t{i}"),
        corpus: "args.me/idebate".into(),
        topic: thesis.into(),
        claim_text: claim.to_string(),
        thesis_text: Some(thesis.into()),
        gold_label: "PRO".into(),
        scheme: LabelScheme::ArgsmeBinary,
    })
    .collect();
    println!("prompt: {}", render_prompt(&samples[0])?);

    let cache = tempfile::tempdir()?;
    let mut config = ChatConfig::new(server.url(), "gpt-4");
    // normally read from ARGCASCADE_API_KEY via `with_env_key`
    config.api_key = Some("sk-example".into());
    config.retry = RetryPolicy::new(5).with_base_delay(Duration::from_millis(10));
    config.cache_dir = Some(cache.path().to_path_buf());

    let views: Vec<_> = samples.iter().map(|s| s.unlabeled()).collect();
    let refiner = ChatRefiner::new(config.clone())?;
    for v in refiner.refine(&views)? {
        println!("{} -> {:?} after {} attempt(s): {:?}", v.sample_id, v.parsed_label, v.attempts, v.raw_text);
    }
    println!("requests so far: {}", server.request_count());

    // A second refiner over the same cache never touches the network.
    let warm = ChatRefiner::new(config)?;
    let again = warm.refine(&views)?;
    println!("warm run: {} network attempts, from cache: {}", warm.network_attempts(), again.iter().all(|v| v.from_cache));
    assert_eq!(warm.network_attempts(), 0);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
