use std::time::Duration;

use serde_json::{json, Value};

use super::gateway::{Provider, ProviderFailure};
use super::CompletionRequest;

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

/// Client for any endpoint speaking the OpenAI chat-completions protocol.
pub struct OpenAiCompatibleProvider {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
    model: String,
}

impl OpenAiCompatibleProvider {
    pub fn new(base_url: &str, api_key: &str, model: &str) -> Result<Self, String> {
        if api_key.trim().is_empty() {
            return Err("API key is empty".into());
        }
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| format!("http client: {e}"))?;
        Ok(Self {
            client,
            base_url: base_url.trim_end_matches('/').to_owned(),
            api_key: api_key.to_owned(),
            model: model.to_owned(),
        })
    }

    fn body(&self, req: &CompletionRequest) -> Value {
        json!({
            "model": self.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        })
    }
}

impl Provider for OpenAiCompatibleProvider {
    fn name(&self) -> &str {
        "openai-compatible"
    }

    fn send(&self, request: &CompletionRequest, timeout: Duration) -> Result<String, ProviderFailure> {
        let resp = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .timeout(timeout)
            .json(&self.body(request))
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    ProviderFailure::TimedOut
                } else {
                    ProviderFailure::Transient {
                        status: None,
                        message: e.to_string(),
                    }
                }
            })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| {
            if e.is_timeout() {
                ProviderFailure::TimedOut
            } else {
                ProviderFailure::Transient {
                    status: Some(status),
                    message: e.to_string(),
                }
            }
        })?;
        if status == 429 || status >= 500 {
            return Err(ProviderFailure::Transient {
                status: Some(status),
                message: body,
            });
        }
        if !(200..300).contains(&status) {
            return Err(ProviderFailure::Fatal { status, body });
        }
        let parsed: Value = serde_json::from_str(&body).map_err(|_| ProviderFailure::Fatal {
            status,
            body: body.clone(),
        })?;
        match parsed.pointer("/choices/0/message/content") {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Null) | None if parsed.get("choices").is_some() => Ok(String::new()),
            _ => Err(ProviderFailure::Fatal { status, body }),
        }
    }
}
