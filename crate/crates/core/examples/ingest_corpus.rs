// Parse the three raw corpus formats into samples and interchange JSONL.
//
//     cargo run --example ingest_corpus

use std::error::Error;
use std::fs::File;
use std::path::PathBuf;

use argcascade::corpus::{
    class_distribution, parse_argsme, parse_ukp, parse_us2016, read_interchange, write_interchange,
    ArgsmeCondition, LabelScheme,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let argsme = parse_argsme(File::open(fixture("argsme_3.json"))?, ArgsmeCondition::WithConclusion)?;
    let ukp = parse_ukp(File::open(fixture("ukp_abortion_sample.tsv"))?, "abortion")?;
    let us2016 = parse_us2016(File::open(fixture("us2016_4.csv"))?)?;

    for (name, samples, scheme) in [
        ("args.me", &argsme, LabelScheme::ArgsmeBinary),
        ("ukp", &ukp, LabelScheme::UkpTernary),
        ("us2016", &us2016, LabelScheme::Us2016Quaternary),
    ] {
        println!("{name}: {:?}", class_distribution(samples, scheme));
    }

    let first = &argsme[0];
    println!("{} [{}] thesis={:?}", first.id, first.corpus, first.thesis_text);
    println!("  claim: {}", first.claim_text);

    // interchange JSONL round trip
    let mut buf = Vec::new();
    write_interchange(&ukp, &mut buf)?;
    print!("{}", String::from_utf8_lossy(&buf).lines().next().unwrap_or_default());
    println!();
    assert_eq!(read_interchange(buf.as_slice())?, ukp);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
