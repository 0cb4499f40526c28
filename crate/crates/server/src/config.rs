//! TOML service configuration and engine construction.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use counterquill_core::clock::SystemClock;
use counterquill_core::corpus::Corpus;
use counterquill_core::llm::{Gateway, MockProvider, OpenAiCompatibleProvider, Provider, RetryPolicy, DEFAULT_MODEL};
use counterquill_core::{Engine, EngineConfig};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("reading config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("live provider mode needs an API key in ${0}")]
    MissingKey(String),

    #[error("auth token variable ${0} is not set")]
    MissingToken(String),

    #[error("provider: {0}")]
    Provider(String),

    #[error(transparent)]
    Engine(#[from] counterquill_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    Live,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub base_url: String,
    /// Name of the environment variable holding the key, never the key itself.
    pub api_key_env: String,
    pub model: String,
    pub mock_seed: u64,
    pub mock_latency_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Live,
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "COUNTERQUILL_API_KEY".into(),
            model: DEFAULT_MODEL.into(),
            mock_seed: 0,
            mock_latency_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Highlight attempts before the session moves on.
    pub attempt_cap: u32,
    pub provider_attempts: u32,
    pub provider_backoff_ms: u64,
    /// Overall budget for one gateway call, retries included.
    pub provider_deadline_ms: u64,
}

impl Default for Limits {
    fn default() -> Self {
        let policy = RetryPolicy::default();
        Self {
            attempt_cap: EngineConfig::default().attempt_cap,
            provider_attempts: policy.max_attempts,
            provider_backoff_ms: policy.initial_backoff.as_millis() as u64,
            provider_deadline_ms: policy.deadline.as_millis() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub data_dir: PathBuf,
    /// Replaces the bundled corpus.
    pub corpus: Option<PathBuf>,
    /// Environment variable holding the bearer token. No auth when unset.
    pub auth_token_env: Option<String>,
    pub provider: ProviderConfig,
    pub limits: Limits,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            data_dir: "counterquill-data".into(),
            corpus: None,
            auth_token_env: None,
            provider: ProviderConfig::default(),
            limits: Limits::default(),
        }
    }
}

impl ServerConfig {
    pub fn parse(text: &str) -> Result<Self, StartupError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, StartupError> {
        let text = std::fs::read_to_string(path).map_err(|source| StartupError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.limits.provider_attempts,
            initial_backoff: Duration::from_millis(self.limits.provider_backoff_ms),
            deadline: Duration::from_millis(self.limits.provider_deadline_ms),
        }
    }
}

/// Everything `serve` needs, resolved from config and environment.
pub struct Startup {
    pub engine: Engine,
    pub token: Option<String>,
}

/// Validates the config, builds the provider and replays the event log.
/// `env` looks up environment variables.
pub fn start(cfg: &ServerConfig, env: impl Fn(&str) -> Option<String>) -> Result<Startup, StartupError> {
    let token = match &cfg.auth_token_env {
        Some(var) => Some(
            env(var)
                .filter(|t| !t.trim().is_empty())
                .ok_or_else(|| StartupError::MissingToken(var.clone()))?,
        ),
        None => None,
    };
    let p = &cfg.provider;
    let provider: Arc<dyn Provider> = match p.mode {
        ProviderMode::Mock => {
            Arc::new(MockProvider::new(p.mock_seed).with_latency(Duration::from_millis(p.mock_latency_ms)))
        }
        ProviderMode::Live => {
            let key = env(&p.api_key_env)
                .filter(|k| !k.trim().is_empty())
                .ok_or_else(|| StartupError::MissingKey(p.api_key_env.clone()))?;
            Arc::new(OpenAiCompatibleProvider::new(&p.base_url, &key, &p.model).map_err(StartupError::Provider)?)
        }
    };
    let corpus = match &cfg.corpus {
        Some(path) => Corpus::load(path)?,
        None => Corpus::bundled(),
    };
    let engine = Engine::open(
        &cfg.data_dir,
        corpus,
        Gateway::new(provider, cfg.retry_policy()),
        Arc::new(SystemClock),
        EngineConfig {
            attempt_cap: cfg.limits.attempt_cap,
        },
    )?;
    Ok(Startup { engine, token })
}
