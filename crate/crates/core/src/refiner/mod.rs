//! The LLM tier: prompts, reply parsing, the chat-completions client and
//! offline stand-ins for it.

mod cache;
mod chat;
mod mock;
mod prompt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{LabelScheme, UnlabeledSample};

pub use cache::{CachedReply, ResponseCache};
pub use chat::{classify_remote, ChatConfig, ChatRefiner, API_KEY_ENV};
pub use mock::{FixedReplyRefiner, LabelReplyRefiner, TranscriptEntry, TranscriptRefiner};
pub use prompt::{
    canonical_reply, parse_verdict, render_prompt, LexiconEntry, ParsedVerdict, PromptTemplate,
    BINARY_TEMPLATE, QUATERNARY_TEMPLATE, TERNARY_TEMPLATE,
};

#[derive(Debug, Error)]
pub enum RefinerError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sample `{0}` has an empty claim")]
    EmptyClaim(String),
    #[error("sample `{0}` needs a thesis for its label scheme")]
    MissingThesis(String),
    #[error("no samples to refine")]
    EmptyBatch,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {message}")]
    Transcript { line: usize, message: String },
}

/// What the LLM's reply amounted to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum VerdictLabel {
    Class(String),
    Unparseable,
    /// No reply obtained (retries exhausted, non-retryable status, or an
    /// offline cache miss).
    TransportFailure(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmVerdict {
    pub sample_id: String,
    pub raw_text: Option<String>,
    pub parsed_label: VerdictLabel,
    pub latency_ms: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// HTTP attempts made; zero for cache hits and mocks.
    pub attempts: u32,
    pub from_cache: bool,
}

impl LlmVerdict {
    pub(crate) fn from_reply(sample_id: &str, scheme: LabelScheme, reply: String) -> Self {
        let parsed_label = match parse_verdict(&reply, scheme) {
            ParsedVerdict::Class(c) => VerdictLabel::Class(c.to_string()),
            ParsedVerdict::Unparseable => VerdictLabel::Unparseable,
        };
        LlmVerdict {
            sample_id: sample_id.to_string(),
            raw_text: Some(reply),
            parsed_label,
            latency_ms: 0,
            prompt_tokens: 0,
            completion_tokens: 0,
            attempts: 0,
            from_cache: false,
        }
    }

    pub(crate) fn failure(sample_id: &str, message: impl Into<String>) -> Self {
        LlmVerdict {
            sample_id: sample_id.to_string(),
            raw_text: None,
            parsed_label: VerdictLabel::TransportFailure(message.into()),
            latency_ms: 0,
            prompt_tokens: 0,
            completion_tokens: 0,
            attempts: 0,
            from_cache: false,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match &self.parsed_label {
            VerdictLabel::Class(c) => Some(c),
            _ => None,
        }
    }
}

/// Anything that can answer delegated samples. Implementations return one
/// verdict per input, in input order.
pub trait Refiner: Sync {
    fn name(&self) -> &str;

    /// Configuration checks that must pass before any call is made.
    fn preflight(&self) -> Result<(), RefinerError> {
        Ok(())
    }

    fn refine(&self, samples: &[UnlabeledSample<'_>]) -> Result<Vec<LlmVerdict>, RefinerError>;
}

/// Hex SHA-256 of the rendered prompt. Keys mock transcripts.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Hex SHA-256 over model name and prompt. Keys the response cache.
pub fn cache_key(model: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    hex::encode(hasher.finalize())
}

pub(crate) fn render_all(samples: &[UnlabeledSample<'_>]) -> Result<Vec<String>, RefinerError> {
    samples
        .iter()
        .map(|s| PromptTemplate::for_scheme(s.scheme).render(s))
        .collect()
}
