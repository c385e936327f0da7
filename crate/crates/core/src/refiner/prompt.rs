//! Prompt rendering and reply parsing.

use crate::corpus::{ArgumentSample, LabelScheme, UnlabeledSample};

use super::RefinerError;

/// The binary for/contra prompt, byte for byte.
pub const BINARY_TEMPLATE: &str = "This is a thesis “{thesis}”. And this is a claim “{claim}”. Is the claim an argument for or contra the thesis? Write a one-sentence answer.";

/// UKP variant: the topic fills the thesis slot and the question gains a
/// third option.
pub const TERNARY_TEMPLATE: &str = "This is a thesis “{thesis}”. And this is a claim “{claim}”. Is the claim an argument for the thesis, an argument against the thesis, or not an argument at all? Write a one-sentence answer.";

/// US2016 variant over a proposition pair.
pub const QUATERNARY_TEMPLATE: &str = "This is a proposition “{thesis}”. And this is another proposition “{claim}”. Does the second proposition supply a reason for accepting the first (inference), conflict with it (conflict), rephrase it (rephrase), or have no relation to it (no relation)? Write a one-sentence answer.";

/// Result of reading a reply against a scheme's lexicon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedVerdict {
    Class(&'static str),
    Unparseable,
}

impl ParsedVerdict {
    pub fn class(&self) -> Option<&'static str> {
        match self {
            ParsedVerdict::Class(c) => Some(c),
            ParsedVerdict::Unparseable => None,
        }
    }
}

/// A phrase group. Dominant groups are checked first within a clause and
/// override any other match there; a dominant group without a class makes
/// the clause unparseable (negations under the binary scheme).
#[derive(Debug, Clone)]
pub struct LexiconEntry {
    pub class: Option<&'static str>,
    pub phrases: &'static [&'static str],
    pub dominant: bool,
}

const PRO_PHRASES: &[&str] = &[
    "for the thesis",
    "supports",
    "argument for",
    "in favor of",
    "in favour of",
];
const CON_PHRASES: &[&str] = &["against", "contra", "opposes"];
const NON_PHRASES: &[&str] = &[
    "not an argument",
    "no argument",
    "neither",
    "non-argument",
];

fn lexicon(scheme: LabelScheme) -> Vec<LexiconEntry> {
    let entry = |class, phrases, dominant| LexiconEntry {
        class,
        phrases,
        dominant,
    };
    match scheme {
        LabelScheme::ArgsmeBinary => vec![
            entry(None, NON_PHRASES, true),
            entry(Some("PRO"), PRO_PHRASES, false),
            entry(Some("CON"), CON_PHRASES, false),
        ],
        LabelScheme::UkpTernary => vec![
            entry(Some("NON"), NON_PHRASES, true),
            entry(Some("PRO"), PRO_PHRASES, false),
            entry(Some("CON"), CON_PHRASES, false),
        ],
        LabelScheme::Us2016Quaternary => vec![
            entry(
                Some("NO"),
                &["no relation", "no relationship", "not related", "unrelated"],
                true,
            ),
            entry(
                Some("RA"),
                &[
                    "inference",
                    "supplies a reason",
                    "provides a reason",
                    "reason for accepting",
                    "supports",
                ],
                false,
            ),
            entry(
                Some("CA"),
                &["conflict", "incompatible", "contradicts", "attacks"],
                false,
            ),
            entry(
                Some("MA"),
                &["rephrase", "rephrases", "reformulation", "restates", "paraphrase"],
                false,
            ),
        ],
    }
}

/// Prompt text plus the lexicon used to read replies to it.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub scheme: LabelScheme,
    pub template: &'static str,
    pub verdict_lexicon: Vec<LexiconEntry>,
}

impl PromptTemplate {
    pub fn for_scheme(scheme: LabelScheme) -> Self {
        let template = match scheme {
            LabelScheme::ArgsmeBinary => BINARY_TEMPLATE,
            LabelScheme::UkpTernary => TERNARY_TEMPLATE,
            LabelScheme::Us2016Quaternary => QUATERNARY_TEMPLATE,
        };
        PromptTemplate {
            scheme,
            template,
            verdict_lexicon: lexicon(scheme),
        }
    }

    /// Fills the slots. UKP samples have no thesis, so their topic is used.
    pub fn render(&self, sample: &UnlabeledSample<'_>) -> Result<String, RefinerError> {
        let claim = sample.claim_text.trim();
        if claim.is_empty() {
            return Err(RefinerError::EmptyClaim(sample.id.to_string()));
        }
        let thesis = match (self.scheme, sample.thesis_text) {
            (_, Some(t)) if !t.trim().is_empty() => t,
            (LabelScheme::UkpTernary, _) if !sample.topic.trim().is_empty() => sample.topic,
            _ => return Err(RefinerError::MissingThesis(sample.id.to_string())),
        };
        Ok(fill_slots(self.template, thesis, sample.claim_text))
    }

    pub fn parse(&self, raw: &str) -> ParsedVerdict {
        parse_with_lexicon(raw, &self.verdict_lexicon)
    }
}

// Single pass, so slot markers inside the inserted text stay literal.
fn fill_slots(template: &str, thesis: &str, claim: &str) -> String {
    let mut out = String::with_capacity(template.len() + thesis.len() + claim.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        if let Some(after) = tail.strip_prefix("{thesis}") {
            out.push_str(thesis);
            rest = after;
        } else if let Some(after) = tail.strip_prefix("{claim}") {
            out.push_str(claim);
            rest = after;
        } else {
            out.push('{');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    out
}

pub fn render_prompt(sample: &ArgumentSample) -> Result<String, RefinerError> {
    PromptTemplate::for_scheme(sample.scheme).render(&sample.unlabeled())
}

pub fn parse_verdict(raw: &str, scheme: LabelScheme) -> ParsedVerdict {
    parse_with_lexicon(raw, &lexicon(scheme))
}

fn contains_phrase(haystack: &str, phrase: &str) -> bool {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    haystack.match_indices(phrase).any(|(start, _)| {
        let before = haystack[..start].chars().next_back();
        let after = haystack[start + phrase.len()..].chars().next();
        !before.is_some_and(is_word) && !after.is_some_and(is_word)
    })
}

fn clauses(text: &str) -> Vec<String> {
    let mut text = text.to_lowercase();
    for conjunction in [" because ", " but ", " while ", " since ", " whereas "] {
        text = text.replace(conjunction, ".");
    }
    text.split(['.', ',', ';', ':', '!', '?', '\n'])
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(str::to_string)
        .collect()
}

/// The first clause containing any lexicon phrase decides. Matches from
/// more than one class in that clause make the reply unparseable.
fn parse_with_lexicon(raw: &str, lexicon: &[LexiconEntry]) -> ParsedVerdict {
    for clause in clauses(raw) {
        let hits = |dominant: bool| -> Vec<Option<&'static str>> {
            let mut found: Vec<Option<&'static str>> = Vec::new();
            for entry in lexicon.iter().filter(|e| e.dominant == dominant) {
                if entry.phrases.iter().any(|p| contains_phrase(&clause, p))
                    && !found.contains(&entry.class)
                {
                    found.push(entry.class);
                }
            }
            found
        };
        let dominant = hits(true);
        let found = if dominant.is_empty() { hits(false) } else { dominant };
        match found.as_slice() {
            [] => continue,
            [Some(class)] => return ParsedVerdict::Class(class),
            _ => return ParsedVerdict::Unparseable,
        }
    }
    ParsedVerdict::Unparseable
}

/// A reply that parses back to `class`. Used by the mock refiners.
pub fn canonical_reply(scheme: LabelScheme, class: &str) -> Option<&'static str> {
    let reply = match (scheme, class) {
        (LabelScheme::ArgsmeBinary | LabelScheme::UkpTernary, "PRO") => {
            "The claim is an argument for the thesis."
        }
        (LabelScheme::ArgsmeBinary | LabelScheme::UkpTernary, "CON") => {
            "The claim is an argument against the thesis."
        }
        (LabelScheme::UkpTernary, "NON") => "The claim is not an argument.",
        (LabelScheme::Us2016Quaternary, "RA") => {
            "The second proposition supplies a reason for accepting the first (inference)."
        }
        (LabelScheme::Us2016Quaternary, "CA") => "The second proposition is in conflict with the first.",
        (LabelScheme::Us2016Quaternary, "MA") => "The second proposition is a rephrase of the first.",
        (LabelScheme::Us2016Quaternary, "NO") => "There is no relation between the two propositions.",
        _ => return None,
    };
    Some(reply)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binary(thesis: &str, claim: &str) -> ArgumentSample {
        ArgumentSample {
            id: "s".into(),
            corpus: "args.me".into(),
            topic: thesis.into(),
            claim_text: claim.into(),
            thesis_text: Some(thesis.into()),
            gold_label: "PRO".into(),
            scheme: LabelScheme::ArgsmeBinary,
        }
    }

    #[test]
    fn binary_snapshot() {
        assert_eq!(
            render_prompt(&binary("T", "C")).unwrap(),
            "This is a thesis “T”. And this is a claim “C”. Is the claim an argument for or contra the thesis? Write a one-sentence answer."
        );
    }

    #[test]
    fn ternary_snapshot_uses_topic() {
        let s = ArgumentSample {
            id: "u".into(),
            corpus: "ukp".into(),
            topic: "nuclear energy".into(),
            claim_text: "Reactors are safe.".into(),
            thesis_text: None,
            gold_label: "PRO".into(),
            scheme: LabelScheme::UkpTernary,
        };
        assert_eq!(
            render_prompt(&s).unwrap(),
            "This is a thesis “nuclear energy”. And this is a claim “Reactors are safe.”. Is the claim an argument for the thesis, an argument against the thesis, or not an argument at all? Write a one-sentence answer."
        );
    }

    #[test]
    fn quaternary_snapshot() {
        let s = ArgumentSample {
            id: "q".into(),
            corpus: "us2016".into(),
            topic: "us2016".into(),
            claim_text: "Taxes went up".into(),
            thesis_text: Some("The economy suffered".into()),
            gold_label: "RA".into(),
            scheme: LabelScheme::Us2016Quaternary,
        };
        assert_eq!(
            render_prompt(&s).unwrap(),
            "This is a proposition “The economy suffered”. And this is another proposition “Taxes went up”. Does the second proposition supply a reason for accepting the first (inference), conflict with it (conflict), rephrase it (rephrase), or have no relation to it (no relation)? Write a one-sentence answer."
        );
    }

    #[test]
    fn precondition_errors() {
        assert!(matches!(
            render_prompt(&binary("T", "  ")),
            Err(RefinerError::EmptyClaim(_))
        ));
        let mut s = binary("T", "C");
        s.thesis_text = None;
        assert!(matches!(render_prompt(&s), Err(RefinerError::MissingThesis(_))));
    }

    #[test]
    fn slot_markers_in_text_stay_literal() {
        let out = render_prompt(&binary("{claim}", "{thesis}")).unwrap();
        assert!(out.starts_with("This is a thesis “{claim}”. And this is a claim “{thesis}”."));
    }

    #[test]
    fn verdict_examples() {
        let b = LabelScheme::ArgsmeBinary;
        assert_eq!(
            parse_verdict("The claim is an argument for the thesis.", b),
            ParsedVerdict::Class("PRO")
        );
        assert_eq!(
            parse_verdict("It argues against the thesis because tourism causes pollution.", b),
            ParsedVerdict::Class("CON")
        );
        assert_eq!(parse_verdict("Interesting question!", b), ParsedVerdict::Unparseable);
        assert_eq!(
            parse_verdict("It is an argument for or against it", b),
            ParsedVerdict::Unparseable
        );
        assert_eq!(
            parse_verdict("This is not an argument for the thesis.", b),
            ParsedVerdict::Unparseable
        );
        assert_eq!(
            parse_verdict("This is not an argument for or against the thesis.", LabelScheme::UkpTernary),
            ParsedVerdict::Class("NON")
        );
        assert_eq!(
            parse_verdict("Hmm. The claim SUPPORTS the thesis.", b),
            ParsedVerdict::Class("PRO")
        );
        // "supportsx" is not the word "supports"
        assert_eq!(parse_verdict("supportsx", b), ParsedVerdict::Unparseable);
        assert_eq!(
            parse_verdict("The two statements are unrelated.", LabelScheme::Us2016Quaternary),
            ParsedVerdict::Class("NO")
        );
        assert_eq!(
            parse_verdict("The second contradicts the first.", LabelScheme::Us2016Quaternary),
            ParsedVerdict::Class("CA")
        );
    }

    #[test]
    fn canonical_replies_round_trip() {
        for scheme in LabelScheme::ALL {
            for class in scheme.classes() {
                let reply = canonical_reply(scheme, class).unwrap();
                assert_eq!(parse_verdict(reply, scheme), ParsedVerdict::Class(class), "{reply}");
            }
        }
        assert!(canonical_reply(LabelScheme::ArgsmeBinary, "NON").is_none());
    }

    proptest! {
        #[test]
        fn verdict_stays_in_scheme(raw in ".{0,120}", scheme in prop::sample::select(LabelScheme::ALL.to_vec())) {
            if let ParsedVerdict::Class(c) = parse_verdict(&raw, scheme) {
                prop_assert!(scheme.contains(c));
            }
        }

        #[test]
        fn rendering_is_injective(
            a in "[a-zA-Z0-9 .,!?]{1,30}", b in "[a-zA-Z0-9 .,!?]{1,30}",
            c in "[a-zA-Z0-9 .,!?]{1,30}", d in "[a-zA-Z0-9 .,!?]{1,30}",
        ) {
            prop_assume!(!b.trim().is_empty() && !d.trim().is_empty());
            prop_assume!(!a.trim().is_empty() && !c.trim().is_empty());
            let p1 = render_prompt(&binary(&a, &b)).unwrap();
            let p2 = render_prompt(&binary(&c, &d)).unwrap();
            prop_assert_eq!(p1 == p2, a == c && b == d);
        }
    }
}
