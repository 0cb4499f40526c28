use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::CompletionRequest;

/// What a single provider call can go wrong with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderFailure {
    /// Worth retrying: connection trouble, 429, 5xx.
    Transient { status: Option<u16>, message: String },
    /// Not worth retrying: auth, bad request, malformed body.
    Fatal { status: u16, body: String },
    /// The per-call timeout handed to the provider elapsed.
    TimedOut,
}

pub trait Provider: Send + Sync {
    fn name(&self) -> &str;

    /// One attempt. `timeout` is the remaining call budget.
    fn send(&self, request: &CompletionRequest, timeout: Duration) -> Result<String, ProviderFailure>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("provider call exceeded its {deadline_ms} ms deadline")]
    Timeout { deadline_ms: u64 },

    #[error("provider error (status {status}): {body}")]
    Provider { status: u16, body: String },

    #[error("provider still failing after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: String },

    #[error("provider reply could not be interpreted: {0}")]
    Unparseable(String),

    #[error("malformed completion request: {0}")]
    InvalidRequest(String),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::Timeout { .. } => "provider_timeout",
            GatewayError::Provider { .. } => "provider_error",
            GatewayError::ExhaustedRetries { .. } => "provider_exhausted",
            GatewayError::Unparseable(_) => "provider_unparseable",
            GatewayError::InvalidRequest(_) => "invalid_argument",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    /// Budget for the whole call, retries and backoff included.
    pub deadline: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            deadline: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff.saturating_mul(1 << (attempt - 1).min(16))
    }
}

#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn Provider>,
    policy: RetryPolicy,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("provider", &self.provider.name())
            .field("policy", &self.policy)
            .finish()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>, policy: RetryPolicy) -> Self {
        Self { provider, policy }
    }

    pub fn policy(&self) -> RetryPolicy {
        self.policy
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    /// Sends `request`, retrying transient failures with exponential backoff
    /// until the attempt limit or the deadline runs out.
    pub fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        request.validate().map_err(GatewayError::InvalidRequest)?;
        let deadline_ms = self.policy.deadline.as_millis() as u64;
        let timeout = || GatewayError::Timeout { deadline_ms };
        let started = Instant::now();
        let max = self.policy.max_attempts.max(1);

        for attempt in 1..=max {
            let remaining = self.policy.deadline.saturating_sub(started.elapsed());
            if remaining.is_zero() {
                return Err(timeout());
            }
            let failure = match self.provider.send(request, remaining) {
                Ok(text) if text.trim().is_empty() => {
                    return Err(GatewayError::Provider {
                        status: 200,
                        body: text,
                    })
                }
                Ok(text) => return Ok(text),
                Err(ProviderFailure::Fatal { status, body }) => {
                    return Err(GatewayError::Provider { status, body })
                }
                Err(ProviderFailure::TimedOut) => return Err(timeout()),
                Err(ProviderFailure::Transient { status, message }) => match status {
                    Some(s) => format!("status {s}: {message}"),
                    None => message,
                },
            };
            tracing::warn!(
                provider = self.provider.name(),
                purpose = %request.purpose,
                attempt,
                %failure,
                "transient provider failure"
            );
            if attempt == max {
                return Err(GatewayError::ExhaustedRetries {
                    attempts: max,
                    last: failure,
                });
            }
            let pause = self.policy.backoff(attempt);
            if started.elapsed() + pause >= self.policy.deadline {
                return Err(timeout());
            }
            std::thread::sleep(pause);
        }
        unreachable!("loop returns on the last attempt")
    }
}
