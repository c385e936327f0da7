// Prompt rendering per label scheme and parsing of free-text replies.
//
//     cargo run --example parse_verdicts

use std::error::Error;

use argcascade::corpus::{ArgumentSample, LabelScheme};
use argcascade::refiner::{parse_verdict, render_prompt};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let ukp = ArgumentSample {
        id: "ukp/nuclear_energy/7".into(),
        corpus: "ukp".into(),
        topic: "nuclear energy".into(),
        claim_text: "Nuclear plants emit almost no carbon dioxide.".into(),
        thesis_text: None,
        gold_label: "PRO".into(),
        scheme: LabelScheme::UkpTernary,
    };
    println!("{}\n", render_prompt(&ukp)?);

    let replies = [
        (LabelScheme::ArgsmeBinary, "The claim is an argument for the thesis."),
        (LabelScheme::ArgsmeBinary, "This claim is contra the thesis."),
        (LabelScheme::ArgsmeBinary, "It is not an argument for the thesis."),
        (LabelScheme::UkpTernary, "It is not an argument at all."),
        (LabelScheme::UkpTernary, "It argues against the thesis."),
        (LabelScheme::Us2016Quaternary, "The second proposition rephrases the first."),
        (LabelScheme::Us2016Quaternary, "They have no relation to each other."),
        (LabelScheme::ArgsmeBinary, "Hard to say."),
    ];
    for (scheme, reply) in replies {
        println!("{:<18} {reply:<48} -> {:?}", scheme.name(), parse_verdict(reply, scheme));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
