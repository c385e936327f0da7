//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs offline against generated fixtures and scripted servers.
//!
//! Set `ARGCASCADE_CORPUS_DIR` to a directory holding the public corpora
//! (`args-me.json`, `ukp/<topic>.tsv`, `us2016.csv`) to also check the
//! reference class counts against the real files.

mod common;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use argcascade::base_model::{load_predictions, save_predictions, PredictionFile, PredictionRecord, ProbabilityVector};
use argcascade::calibration::{calibrate, route, Route};
use argcascade::cascade::run_cascade;
use argcascade::cli::run_with;
use argcascade::corpus::{ArgumentSample, LabelScheme};
use argcascade::http::RetryPolicy;
use argcascade::metrics::{evaluate, round2};
use argcascade::mock_server::{MockResponse, ScriptedServer};
use argcascade::refiner::{render_prompt, ChatConfig, ChatRefiner, LabelReplyRefiner, Refiner, VerdictLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

const CORPUS_TIME_LIMIT: Duration = Duration::from_secs(60);

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("dataset statistics", dataset_statistics),
        ("calibration oracle equivalence", calibration_oracle),
        ("cascade identity", cascade_identity),
        ("oracle improvement", oracle_improvement),
        ("metrics oracle", metrics_oracle),
        ("prompt conformance", prompt_conformance),
        ("wire conformance", wire_conformance),
        ("delegation count", delegation_count_check),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {}", panic_message(&e))));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {reason}");
            }
        }
    }
    match real_corpus_statistics() {
        None => println!("SKIP  dataset statistics on real corpora: ARGCASCADE_CORPUS_DIR not set"),
        Some(Ok(detail)) => println!("PASS  dataset statistics on real corpora: {detail}"),
        Some(Err(reason)) => {
            failed += 1;
            println!("FAIL  dataset statistics on real corpora: {reason}");
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

/// Runs the CLI in-process and returns its stdout.
fn cli(args: &[String]) -> Outcome {
    let mut out = Vec::new();
    let argv = std::iter::once("argcascade".to_string()).chain(args.iter().cloned());
    let result = run_with(argv, &mut out);
    let text = String::from_utf8_lossy(&out).into_owned();
    result.map(|_| text.clone()).map_err(|e| format!("{e}\n{text}"))
}

fn args(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Ingests with `--expect` flags for every class and the total; the CLI
/// fails on any mismatch.
fn ingest_expecting(base: Vec<String>, expected: &[(&str, usize)], total: usize) -> Outcome {
    let mut argv = base;
    for (class, count) in expected {
        argv.push("--expect".into());
        argv.push(format!("{class}={count}"));
    }
    argv.push("--expect-total".into());
    argv.push(total.to_string());
    let started = Instant::now();
    cli(&argv)?;
    let elapsed = started.elapsed();
    ensure!(elapsed < CORPUS_TIME_LIMIT, "took {elapsed:?}");
    Ok(format!("{elapsed:.2?}"))
}

fn check_argsme(path: &Path) -> Outcome {
    let mut times = Vec::new();
    for (portal, premises, pro, con, _) in common::ARGSME_PORTALS {
        let t = ingest_expecting(
            args(&["ingest", "argsme", portal, "--input", path.to_str().unwrap()]),
            &[("PRO", pro), ("CON", con)],
            premises,
        )
        .map_err(|e| format!("args.me {portal}: {e}"))?;
        times.push(format!("{portal} {t}"));
    }
    Ok(times.join(", "))
}

fn ukp_file(dir: &Path, topic: &str) -> PathBuf {
    dir.join(format!("{}.tsv", topic.replace(' ', "_")))
}

fn check_ukp(dir: &Path) -> Outcome {
    let started = Instant::now();
    for (topic, non, pro, con) in common::UKP_TOPIC_COUNTS {
        let path = ukp_file(dir, topic);
        ingest_expecting(
            args(&["ingest", "ukp", topic, "--input", path.to_str().unwrap()]),
            &[("NON", non), ("PRO", pro), ("CON", con)],
            non + pro + con,
        )
        .map_err(|e| format!("ukp {topic}: {e}"))?;
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < CORPUS_TIME_LIMIT, "ukp took {elapsed:?}");
    Ok(format!("ukp 8 topics {elapsed:.2?}"))
}

fn check_us2016(path: &Path) -> Outcome {
    let total = common::US2016_COUNTS.iter().map(|c| c.1).sum();
    let t = ingest_expecting(
        args(&["ingest", "us2016", "--input", path.to_str().unwrap()]),
        &common::US2016_COUNTS,
        total,
    )
    .map_err(|e| format!("us2016: {e}"))?;
    Ok(format!("us2016 {t}"))
}

/// Raw-format replicas carrying the reference class counts, pushed through
/// the same ingestion path as the real files.
fn dataset_statistics() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let argsme = dir.path().join("args-me.json");
    fs::write(&argsme, common::argsme_corpus()).map_err(|e| e.to_string())?;
    let ukp = dir.path().join("ukp");
    fs::create_dir(&ukp).map_err(|e| e.to_string())?;
    for (topic, non, pro, con) in common::UKP_TOPIC_COUNTS {
        fs::write(ukp_file(&ukp, topic), common::ukp_topic_tsv(topic, non, pro, con)).map_err(|e| e.to_string())?;
    }
    let us = dir.path().join("us2016.csv");
    fs::write(&us, common::us2016_csv(&common::US2016_COUNTS)).map_err(|e| e.to_string())?;

    let a = check_argsme(&argsme)?;
    let u = check_ukp(&ukp)?;
    let s = check_us2016(&us)?;
    Ok(format!("generated replicas; {a}; {u}; {s}"))
}

fn real_corpus_statistics() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("ARGCASCADE_CORPUS_DIR")?);
    let run = || -> Outcome {
        let a = check_argsme(&dir.join("args-me.json"))?;
        let u = check_ukp(&dir.join("ukp"))?;
        let s = check_us2016(&dir.join("us2016.csv"))?;
        Ok(format!("{a}; {u}; {s}"))
    };
    Some(catch_unwind(run).unwrap_or_else(|e| Err(format!("panicked: {}", panic_message(&e)))))
}

/// Binary prediction record whose uncertainty is `u` (u < 0.5).
fn record_with_uncertainty(id: String, u: f64) -> PredictionRecord {
    let probs = ProbabilityVector::new(LabelScheme::ArgsmeBinary, vec![1.0 - u, u]).expect("simplex");
    PredictionRecord::new(id, probs)
}

fn calibration_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let started = Instant::now();
    let mut in_router = Duration::ZERO;
    let mut total = 0usize;
    for trial in 0..1000 {
        let n = rng.random_range(1..=10_000usize);
        let permille = rng.random_range(0..=1000usize);
        let f = permille as f64 / 1000.0;
        let mut seen = HashSet::new();
        let mut records = Vec::with_capacity(n);
        while records.len() < n {
            let r = record_with_uncertainty(format!("r{}", records.len()), rng.random_range(0.0..0.5));
            if seen.insert(r.uncertainty.to_bits()) {
                records.push(r);
            }
        }
        total += n;

        let timer = Instant::now();
        let profile = calibrate(&records, f).map_err(|e| e.to_string())?;
        let routes = route(&records, &profile);
        in_router += timer.elapsed();
        let got: HashSet<&str> = records
            .iter()
            .filter(|r| routes[&r.sample_id] == Route::Llm)
            .map(|r| r.sample_id.as_str())
            .collect();

        // oracle: sort everything by uncertainty, take the k largest
        let k = (permille * n).div_ceil(1000);
        let mut order: Vec<&PredictionRecord> = records.iter().collect();
        order.sort_by(|a, b| b.uncertainty.total_cmp(&a.uncertainty));
        let want: HashSet<&str> = order[..k].iter().map(|r| r.sample_id.as_str()).collect();
        ensure!(
            got == want,
            "trial {trial}: n={n} f={f} routed {} expected {k}",
            got.len()
        );
    }
    ensure!(in_router < Duration::from_secs(30), "calibrate + route took {in_router:?}");
    Ok(format!(
        "1000 lists, {total} scores, 0 mismatches; calibrate + route {in_router:.2?} (wall {:.2?} with fixtures and oracle)",
        started.elapsed()
    ))
}

fn cascade_identity() -> Outcome {
    let mut diffs = 0;
    for scheme in LabelScheme::ALL {
        let synth = common::synthetic(500, scheme, 0.7, 99);
        let records = synth.records();
        let echo = LabelReplyRefiner::new(
            "echo",
            records.iter().map(|r| (r.sample_id.clone(), r.predicted_label.clone())).collect(),
        );
        for step in 0..=10 {
            let f = step as f64 / 10.0;
            let profile = calibrate(&records, f).map_err(|e| e.to_string())?;
            let out = run_cascade(&records, &synth.samples, &profile, &echo).map_err(|e| e.to_string())?;
            diffs += out
                .results
                .iter()
                .zip(&records)
                .filter(|(r, b)| r.final_label.as_bytes() != b.predicted_label.as_bytes())
                .count();
        }
    }
    ensure!(diffs == 0, "{diffs} label differences");
    Ok("3 schemes x 11 fractions x 500 records, 0 diffs".into())
}

fn oracle_improvement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut strict = 0;
    let mut checks = 0;
    for fixture in 0..100 {
        let scheme = LabelScheme::ALL[fixture % 3];
        let n = rng.random_range(20..400);
        let synth = common::synthetic(n, scheme, rng.random_range(0.3..0.9), rng.random());
        let records = synth.records();
        let gold = synth.gold();
        let oracle = LabelReplyRefiner::new("oracle", gold.clone());
        let base = evaluate(&records, &gold, scheme).map_err(|e| e.to_string())?;
        for step in 0..=10 {
            let f = step as f64 / 10.0;
            let profile = calibrate(&records, f).map_err(|e| e.to_string())?;
            let out = run_cascade(&records, &synth.samples, &profile, &oracle).map_err(|e| e.to_string())?;
            let cascade = evaluate(&out.results, &gold, scheme).map_err(|e| e.to_string())?;
            let delegated_error = records
                .iter()
                .any(|r| profile.delegates(r.uncertainty) && r.predicted_label != gold[&r.sample_id]);
            ensure!(
                cascade.top1 >= base.top1,
                "fixture {fixture} f={f}: cascade {} < base {}",
                cascade.top1,
                base.top1
            );
            if delegated_error {
                ensure!(
                    cascade.top1 > base.top1,
                    "fixture {fixture} f={f}: delegated a base error but no gain"
                );
                strict += 1;
            }
            checks += 1;
        }
    }
    Ok(format!("100 fixtures, {checks} operating points, {strict} strict gains"))
}

fn metrics_oracle() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for instance in 0..1000 {
        let scheme = LabelScheme::ALL[rng.random_range(0..3)];
        let k = scheme.num_classes();
        let n = rng.random_range(1..=200);
        let pairs: Vec<(usize, usize)> = (0..n).map(|_| (rng.random_range(0..k), rng.random_range(0..k))).collect();
        let (results, gold) = as_results(&pairs, scheme);
        let report = evaluate(&results, &gold, scheme).map_err(|e| e.to_string())?;

        let acc = 100.0 * pairs.iter().filter(|(g, p)| g == p).count() as f64 / n as f64;
        ensure!(close(report.top1, acc), "instance {instance}: top1 {} vs {acc}", report.top1);
        let mut f1s = Vec::new();
        for (c, name) in scheme.classes().iter().enumerate() {
            let tp = pairs.iter().filter(|&&(g, p)| g == c && p == c).count() as f64;
            let fp = pairs.iter().filter(|&&(g, p)| g != c && p == c).count() as f64;
            let fneg = pairs.iter().filter(|&&(g, p)| g == c && p != c).count() as f64;
            let prec = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let rec = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
            let f1 = if prec + rec > 0.0 { 100.0 * 2.0 * prec * rec / (prec + rec) } else { 0.0 };
            ensure!(
                close(report.per_class[*name].f1, f1),
                "instance {instance}: F1 {name} {} vs {f1}",
                report.per_class[*name].f1
            );
            f1s.push(f1);
        }
        let macro_f1 = f1s.iter().sum::<f64>() / k as f64;
        ensure!(close(report.macro_f1, macro_f1), "instance {instance}: macro {} vs {macro_f1}", report.macro_f1);
    }

    let mut pairs = Vec::new();
    pairs.extend(std::iter::repeat_n((0, 0), 40));
    pairs.extend(std::iter::repeat_n((0, 1), 10));
    pairs.extend(std::iter::repeat_n((1, 0), 20));
    pairs.extend(std::iter::repeat_n((1, 1), 30));
    let (results, gold) = as_results(&pairs, LabelScheme::ArgsmeBinary);
    let report = evaluate(&results, &gold, LabelScheme::ArgsmeBinary).map_err(|e| e.to_string())?;
    ensure!(round2(report.macro_f1) == 69.70, "hand case macro F1 {}", round2(report.macro_f1));
    Ok(format!("1000 random instances within 1e-9; hand case macro F1 {:.2}", round2(report.macro_f1)))
}

fn as_results(
    pairs: &[(usize, usize)],
    scheme: LabelScheme,
) -> (Vec<PredictionRecord>, HashMap<String, String>) {
    let k = scheme.num_classes();
    let mut results = Vec::new();
    let mut gold = HashMap::new();
    for (i, &(g, p)) in pairs.iter().enumerate() {
        let probs: Vec<f64> = (0..k).map(|c| if c == p { 1.0 } else { 0.0 }).collect();
        let id = format!("m{i}");
        results.push(PredictionRecord::new(id.clone(), ProbabilityVector::new(scheme, probs).unwrap()));
        gold.insert(id, scheme.classes()[g].to_string());
    }
    (results, gold)
}

fn tunisia_sample() -> ArgumentSample {
    ArgumentSample {
        id: "tunisia-1".into(),
        corpus: "args.me/idebate".into(),
        topic: "Tunisia should not rely on tourism for economic growth".into(),
        claim_text: "Tourism brings pollution to coastal towns.".into(),
        thesis_text: Some("Tunisia should not rely on tourism for economic growth".into()),
        gold_label: "CON".into(),
        scheme: LabelScheme::ArgsmeBinary,
    }
}

fn prompt_conformance() -> Outcome {
    let rendered = render_prompt(&tunisia_sample()).map_err(|e| e.to_string())?;
    let expected = "This is a thesis \u{201C}Tunisia should not rely on tourism for economic growth\u{201D}. \
                    And this is a claim \u{201C}Tourism brings pollution to coastal towns.\u{201D}. \
                    Is the claim an argument for or contra the thesis? Write a one-sentence answer.";
    ensure!(
        rendered.as_bytes() == expected.as_bytes(),
        "rendered prompt differs:\n  got  {rendered:?}\n  want {expected:?}"
    );
    Ok(format!("{} bytes identical", expected.len()))
}

fn chat_config(server: &ScriptedServer, cache: Option<&Path>) -> ChatConfig {
    let mut c = ChatConfig::new(server.url(), "gpt-4");
    c.api_key = Some("test-key".into());
    c.retry = RetryPolicy::new(5).with_base_delay(Duration::from_millis(5));
    c.cache_dir = cache.map(Path::to_path_buf);
    c
}

fn wire_conformance() -> Outcome {
    let sample = tunisia_sample();
    let view = [sample.unlabeled()];

    // schema of the emitted request
    let server = ScriptedServer::with_responder(|_| MockResponse::chat("It is an argument against the thesis."))
        .map_err(|e| e.to_string())?;
    ChatRefiner::new(chat_config(&server, None))
        .map_err(|e| e.to_string())?
        .refine(&view)
        .map_err(|e| e.to_string())?;
    let req = server.requests().into_iter().next().ok_or("no request recorded")?;
    let body = req.json().ok_or("request body is not JSON")?;
    let obj = body.as_object().ok_or("request body is not an object")?;
    let keys: HashSet<&str> = obj.keys().map(String::as_str).collect();
    ensure!(keys == HashSet::from(["model", "messages", "temperature"]), "request keys {keys:?}");
    ensure!(req.method == "POST" && req.path == "/v1/chat/completions", "{} {}", req.method, req.path);
    ensure!(req.header("authorization") == Some("Bearer test-key"), "missing bearer token");
    ensure!(body["model"].is_string() && body["temperature"] == 0, "model/temperature {body}");
    let messages = body["messages"].as_array().ok_or("messages is not an array")?;
    ensure!(
        messages.len() == 1
            && messages[0]["role"] == "user"
            && messages[0]["content"] == render_prompt(&sample).unwrap().as_str(),
        "messages {messages:?}"
    );

    // 429 then 200
    let server = ScriptedServer::start([MockResponse::new(429, "rate limited")], |_| {
        MockResponse::chat("This claim argues for the thesis.")
    })
    .map_err(|e| e.to_string())?;
    let verdicts = ChatRefiner::new(chat_config(&server, None))
        .map_err(|e| e.to_string())?
        .refine(&view)
        .map_err(|e| e.to_string())?;
    ensure!(verdicts.len() == 1, "{} verdicts", verdicts.len());
    ensure!(verdicts[0].attempts == 2 && server.request_count() == 2, "attempts {} recorded {}", verdicts[0].attempts, server.request_count());
    ensure!(verdicts[0].parsed_label == VerdictLabel::Class("PRO".into()), "{:?}", verdicts[0].parsed_label);

    // warm cache
    let cache = tempfile::tempdir().map_err(|e| e.to_string())?;
    let server = ScriptedServer::with_responder(|_| MockResponse::chat("It argues for the thesis."))
        .map_err(|e| e.to_string())?;
    ChatRefiner::new(chat_config(&server, Some(cache.path())))
        .map_err(|e| e.to_string())?
        .refine(&view)
        .map_err(|e| e.to_string())?;
    let cold_calls = server.request_count();
    let warm = ChatRefiner::new(chat_config(&server, Some(cache.path()))).map_err(|e| e.to_string())?;
    let again = warm.refine(&view).map_err(|e| e.to_string())?;
    let warm_calls = server.request_count() - cold_calls;
    ensure!(warm_calls == 0 && warm.network_attempts() == 0, "warm run made {warm_calls} calls");
    ensure!(again[0].from_cache, "warm verdict not from cache");
    Ok("request schema valid; 429->200 gives 1 verdict / 2 attempts; warm cache 0 calls".into())
}

fn delegation_count_check() -> Outcome {
    let synth = common::synthetic(1149, LabelScheme::Us2016Quaternary, 0.7, 1149);
    let mut buf = Vec::new();
    save_predictions(&synth.file, &mut buf).map_err(|e| e.to_string())?;
    let file: PredictionFile = load_predictions(buf.as_slice()).map_err(|e| e.to_string())?;
    let records = file.records();
    ensure!(records.len() == 1149, "{} records", records.len());
    let profile = calibrate(&records, 0.25).map_err(|e| e.to_string())?;
    let routed = route(&records, &profile).values().filter(|r| **r == Route::Llm).count();
    ensure!(profile.k() == 288 && routed == 288, "k = {}, routed = {routed}", profile.k());
    Ok("k = 288, 288 routed".into())
}
