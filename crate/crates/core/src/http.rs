//! Blocking JSON-over-HTTP with retry and exponential backoff.

use std::time::Duration;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HttpError {
    #[error("http status {status} after {attempts} attempt(s): {body}")]
    Status {
        status: u16,
        body: String,
        attempts: u32,
    },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
}

impl HttpError {
    pub fn attempts(&self) -> u32 {
        match self {
            HttpError::Status { attempts, .. } | HttpError::Transport { attempts, .. } => *attempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    /// Scale each delay by a uniform factor in `[0.5, 1.0]`.
    pub jitter: bool,
}

impl RetryPolicy {
    pub fn new(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts: max_attempts.max(1),
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
            jitter: true,
        }
    }

    pub fn with_base_delay(mut self, delay: Duration) -> Self {
        self.base_delay = delay;
        self
    }

    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry.saturating_sub(1));
        let delay = self.base_delay.saturating_mul(factor).min(self.max_delay);
        if self.jitter {
            delay.mul_f64(rand::rng().random_range(0.5..=1.0))
        } else {
            delay
        }
    }
}

/// 429 and 5xx are transient; anything else non-2xx is final.
pub fn is_retryable_status(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

pub fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(timeout))
        .build()
        .into()
}

/// A successful exchange: response body plus the number of attempts it took.
#[derive(Debug, Clone)]
pub struct Reply {
    pub body: String,
    pub attempts: u32,
}

/// POSTs `body` as JSON, retrying transient failures per `policy`.
pub fn post_json(
    agent: &ureq::Agent,
    url: &str,
    bearer: Option<&str>,
    body: &serde_json::Value,
    policy: &RetryPolicy,
) -> Result<Reply, HttpError> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        let mut request = agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = bearer {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let outcome = request.send_json(body);
        let failure = match outcome {
            Ok(mut response) => {
                let status = response.status().as_u16();
                let text = response.body_mut().read_to_string().unwrap_or_default();
                if (200..300).contains(&status) {
                    return Ok(Reply {
                        body: text,
                        attempts: attempt,
                    });
                }
                let err = HttpError::Status {
                    status,
                    body: text,
                    attempts: attempt,
                };
                if !is_retryable_status(status) {
                    return Err(err);
                }
                err
            }
            Err(e) => HttpError::Transport {
                message: e.to_string(),
                attempts: attempt,
            },
        };
        if attempt >= policy.max_attempts {
            return Err(failure);
        }
        log::debug!("attempt {attempt} to {url} failed: {failure}; retrying");
        std::thread::sleep(policy.delay(attempt));
    }
}
