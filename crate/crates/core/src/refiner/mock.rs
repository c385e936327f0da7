//! Offline refiners: scripted transcripts and label-driven stand-ins.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{canonical_reply, prompt_hash, render_all, LlmVerdict, Refiner, RefinerError};
use crate::corpus::UnlabeledSample;

/// One transcript line: `{"prompt_hash": <64 hex>, "reply": <text>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt_hash: String,
    pub reply: String,
}

/// Replays recorded replies keyed by [`prompt_hash`]. Prompts missing from
/// the transcript yield transport-failure verdicts.
#[derive(Debug, Default)]
pub struct TranscriptRefiner {
    replies: HashMap<String, String>,
    calls: AtomicU64,
}

impl TranscriptRefiner {
    pub fn new(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        TranscriptRefiner {
            replies: entries
                .into_iter()
                .map(|e| (e.prompt_hash.to_ascii_lowercase(), e.reply))
                .collect(),
            calls: AtomicU64::new(0),
        }
    }

    pub fn load<R: Read>(stream: R) -> Result<Self, RefinerError> {
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(stream).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(&line).map_err(|e| RefinerError::Transcript {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if entry.prompt_hash.len() != 64
                || !entry.prompt_hash.bytes().all(|b| b.is_ascii_hexdigit())
            {
                return Err(RefinerError::Transcript {
                    line: i + 1,
                    message: format!("`{}` is not a 64-hex hash", entry.prompt_hash),
                });
            }
            entries.push(entry);
        }
        Ok(TranscriptRefiner::new(entries))
    }

    pub fn save<W: Write>(entries: &[TranscriptEntry], mut writer: W) -> std::io::Result<()> {
        for e in entries {
            writeln!(writer, "{}", serde_json::to_string(e)?)?;
        }
        writer.flush()
    }

    /// Number of samples answered so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Refiner for TranscriptRefiner {
    fn name(&self) -> &str {
        "transcript"
    }

    fn refine(&self, samples: &[UnlabeledSample<'_>]) -> Result<Vec<LlmVerdict>, RefinerError> {
        let prompts = render_all(samples)?;
        self.calls.fetch_add(samples.len() as u64, Ordering::Relaxed);
        Ok(samples
            .iter()
            .zip(prompts)
            .map(|(s, prompt)| match self.replies.get(&prompt_hash(&prompt)) {
                Some(reply) => LlmVerdict::from_reply(s.id, s.scheme, reply.clone()),
                None => LlmVerdict::failure(s.id, "no transcript entry for prompt"),
            })
            .collect())
    }
}

/// Answers each sample with the canonical reply for a label looked up by
/// sample id. Built from base predictions it echoes the base tier; built
/// from gold labels it is a perfect oracle.
#[derive(Debug)]
pub struct LabelReplyRefiner {
    name: String,
    labels: HashMap<String, String>,
}

impl LabelReplyRefiner {
    pub fn new(name: impl Into<String>, labels: HashMap<String, String>) -> Self {
        LabelReplyRefiner {
            name: name.into(),
            labels,
        }
    }
}

impl Refiner for LabelReplyRefiner {
    fn name(&self) -> &str {
        &self.name
    }

    fn refine(&self, samples: &[UnlabeledSample<'_>]) -> Result<Vec<LlmVerdict>, RefinerError> {
        Ok(samples
            .iter()
            .map(|s| {
                let reply = self
                    .labels
                    .get(s.id)
                    .and_then(|label| canonical_reply(s.scheme, label))
                    .unwrap_or("I cannot tell.");
                LlmVerdict::from_reply(s.id, s.scheme, reply.to_string())
            })
            .collect())
    }
}

/// Gives the same reply to every sample.
#[derive(Debug, Clone)]
pub struct FixedReplyRefiner {
    reply: String,
}

impl FixedReplyRefiner {
    pub fn new(reply: impl Into<String>) -> Self {
        FixedReplyRefiner {
            reply: reply.into(),
        }
    }
}

impl Refiner for FixedReplyRefiner {
    fn name(&self) -> &str {
        "fixed"
    }

    fn refine(&self, samples: &[UnlabeledSample<'_>]) -> Result<Vec<LlmVerdict>, RefinerError> {
        Ok(samples
            .iter()
            .map(|s| LlmVerdict::from_reply(s.id, s.scheme, self.reply.clone()))
            .collect())
    }
}
