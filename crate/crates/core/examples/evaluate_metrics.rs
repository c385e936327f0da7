// Top-1 accuracy, per-class and macro F1, and report deltas.
//
//     cargo run --example evaluate_metrics

use std::collections::HashMap;
use std::error::Error;

use argcascade::cascade::{CascadeResult, Source};
use argcascade::corpus::LabelScheme;
use argcascade::metrics::{compare, evaluate};

fn results(labels: &[(&str, &str, Source)]) -> (Vec<CascadeResult>, HashMap<String, String>) {
    let mut out = Vec::new();
    let mut gold = HashMap::new();
    for (i, (g, p, source)) in labels.iter().enumerate() {
        let id = format!("s{i}");
        gold.insert(id.clone(), g.to_string());
        out.push(CascadeResult {
            sample_id: id,
            final_label: p.to_string(),
            source: *source,
            base_prediction: p.to_string(),
            uncertainty: 0.0,
            llm_raw: None,
        });
    }
    (out, gold)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    use Source::{Base, Llm};
    let scheme = LabelScheme::UkpTernary;
    let (before, gold) = results(&[
        ("NON", "NON", Base), ("NON", "NON", Base), ("NON", "PRO", Base), ("PRO", "PRO", Base),
        ("PRO", "CON", Base), ("CON", "CON", Base), ("CON", "NON", Base), ("NON", "NON", Base),
    ]);
    let (after, _) = results(&[
        ("NON", "NON", Base), ("NON", "NON", Base), ("NON", "NON", Llm), ("PRO", "PRO", Base),
        ("PRO", "PRO", Llm), ("CON", "CON", Base), ("CON", "NON", Llm), ("NON", "NON", Base),
    ]);

    let a = evaluate(&before, &gold, scheme)?;
    let b = evaluate(&after, &gold, scheme)?;
    println!("before\n{}", a.to_table());
    println!("after\n{}", b.to_table());
    println!("after - before\n{}", compare(&a, &b)?.to_table());
    println!("{}", b.to_json());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
