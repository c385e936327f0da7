use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{cache_key, render_all, CachedReply, LlmVerdict, Refiner, RefinerError, ResponseCache};
use crate::corpus::UnlabeledSample;
use crate::http::{self, RetryPolicy};

pub const API_KEY_ENV: &str = "ARGCASCADE_API_KEY";

/// Endpoint and client settings for a chat-completions server.
#[derive(Debug, Clone)]
pub struct ChatConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub parallelism: usize,
    /// Upper bound on request starts per second; `None` is unbounded.
    pub requests_per_second: Option<f64>,
    pub retry: RetryPolicy,
    pub timeout: Duration,
    pub cache_dir: Option<PathBuf>,
    /// Answer from the cache only; misses become transport failures.
    pub offline: bool,
}

impl ChatConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        ChatConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            parallelism: 4,
            requests_per_second: None,
            retry: RetryPolicy::new(5),
            timeout: Duration::from_secs(120),
            cache_dir: None,
            offline: false,
        }
    }

    /// Fills `api_key` from `ARGCASCADE_API_KEY` when unset.
    pub fn with_env_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        }
        self
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Chat-completions refiner with an optional on-disk reply cache.
pub struct ChatRefiner {
    config: ChatConfig,
    agent: ureq::Agent,
    cache: Option<ResponseCache>,
    next_slot: Mutex<Option<Instant>>,
    network_attempts: AtomicU64,
}

impl ChatRefiner {
    pub fn new(config: ChatConfig) -> Result<Self, RefinerError> {
        let cache = config
            .cache_dir
            .as_ref()
            .map(ResponseCache::open)
            .transpose()?;
        Ok(ChatRefiner {
            agent: http::agent(config.timeout),
            config,
            cache,
            next_slot: Mutex::new(None),
            network_attempts: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }

    /// HTTP attempts made over this refiner's lifetime.
    pub fn network_attempts(&self) -> u64 {
        self.network_attempts.load(Ordering::Relaxed)
    }

    fn wait_for_slot(&self) {
        let Some(rps) = self.config.requests_per_second.filter(|r| *r > 0.0) else {
            return;
        };
        let interval = Duration::from_secs_f64(1.0 / rps);
        let wait = {
            let mut slot = self.next_slot.lock().expect("rate limiter lock");
            let now = Instant::now();
            let start = slot.map_or(now, |s| s.max(now));
            *slot = Some(start + interval);
            start - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    fn ask(&self, sample: &UnlabeledSample<'_>, prompt: &str) -> LlmVerdict {
        let key = cache_key(&self.config.model, prompt);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            let mut verdict = LlmVerdict::from_reply(sample.id, sample.scheme, hit.reply);
            verdict.from_cache = true;
            return verdict;
        }
        if self.config.offline {
            return LlmVerdict::failure(sample.id, "offline mode: reply not cached");
        }

        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        self.wait_for_slot();
        let started = Instant::now();
        let reply = http::post_json(
            &self.agent,
            &self.config.endpoint(),
            self.config.api_key.as_deref(),
            &body,
            &self.config.retry,
        );
        let latency_ms = started.elapsed().as_millis() as u64;
        let attempts = match &reply {
            Ok(r) => r.attempts,
            Err(e) => e.attempts(),
        };
        self.network_attempts
            .fetch_add(u64::from(attempts), Ordering::Relaxed);

        let parsed = reply
            .map_err(|e| e.to_string())
            .and_then(|r| serde_json::from_str::<ChatResponse>(&r.body).map_err(|e| e.to_string()))
            .and_then(|r| {
                let usage = r.usage.unwrap_or_default();
                r.choices
                    .into_iter()
                    .next()
                    .and_then(|c| c.message.content)
                    .map(|content| (content, usage))
                    .ok_or_else(|| "response has no choices[0].message.content".to_string())
            });
        let mut verdict = match parsed {
            Ok((content, usage)) => {
                if let Some(cache) = &self.cache {
                    let entry = CachedReply {
                        model: self.config.model.clone(),
                        prompt: prompt.to_string(),
                        reply: content.clone(),
                        prompt_tokens: usage.prompt_tokens,
                        completion_tokens: usage.completion_tokens,
                    };
                    if let Err(e) = cache.put(&key, &entry) {
                        log::warn!("failed to cache reply for {}: {e}", sample.id);
                    }
                }
                let mut v = LlmVerdict::from_reply(sample.id, sample.scheme, content);
                v.prompt_tokens = usage.prompt_tokens;
                v.completion_tokens = usage.completion_tokens;
                v
            }
            Err(message) => LlmVerdict::failure(sample.id, message),
        };
        verdict.latency_ms = latency_ms;
        verdict.attempts = attempts;
        verdict
    }
}

impl Refiner for ChatRefiner {
    fn name(&self) -> &str {
        &self.config.model
    }

    fn preflight(&self) -> Result<(), RefinerError> {
        if self.config.offline {
            return Ok(());
        }
        match &self.config.api_key {
            Some(k) if !k.is_empty() => Ok(()),
            _ => Err(RefinerError::Config(format!(
                "no API key; set {API_KEY_ENV}"
            ))),
        }
    }

    fn refine(&self, samples: &[UnlabeledSample<'_>]) -> Result<Vec<LlmVerdict>, RefinerError> {
        self.preflight()?;
        let prompts = render_all(samples)?;
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<LlmVerdict>>> = Mutex::new(vec![None; samples.len()]);
        let workers = self.config.parallelism.max(1).min(samples.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= samples.len() {
                        break;
                    }
                    let verdict = self.ask(&samples[i], &prompts[i]);
                    slots.lock().expect("verdict lock")[i] = Some(verdict);
                });
            }
        });
        Ok(slots
            .into_inner()
            .expect("verdict lock")
            .into_iter()
            .map(|v| v.expect("every sample answered"))
            .collect())
    }
}

/// One-shot helper: build a [`ChatRefiner`] and classify `samples`.
pub fn classify_remote(
    samples: &[UnlabeledSample<'_>],
    config: ChatConfig,
) -> Result<Vec<LlmVerdict>, RefinerError> {
    if samples.is_empty() {
        return Err(RefinerError::EmptyBatch);
    }
    let refiner = ChatRefiner::new(config)?;
    refiner.preflight()?;
    refiner.refine(samples)
}
