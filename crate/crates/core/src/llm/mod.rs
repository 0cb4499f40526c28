//! Provider-agnostic chat completion: request types, prompt templates, reply
//! parsing, and the retrying gateway.

mod gateway;
pub mod lexical;
mod mock;
mod openai;
mod parse;
mod prompts;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use gateway::{Gateway, GatewayError, Provider, ProviderFailure, RetryPolicy};
pub use mock::{MockProvider, ScriptedProvider};
pub use openai::{OpenAiCompatibleProvider, DEFAULT_MODEL};
pub use parse::{parse_yes_no, split_verdict, Unparseable};
pub use prompts::{
    render_equivalence_prompt, render_rewrite_prompt, render_suggestion_prompt,
    EquivalencePromptInputs, RewriteMode, SuggestionPromptInputs, QUESTION_1, QUESTION_2,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    Assistant,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Equivalence,
    Suggestion,
    Rewrite,
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Purpose::Equivalence => "equivalence",
            Purpose::Suggestion => "suggestion",
            Purpose::Rewrite => "rewrite",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f32,
    pub max_output_tokens: u32,
    pub purpose: Purpose,
    /// Structured copies of the template inputs. Never sent to a live
    /// provider; the mock provider and logs read them.
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), String> {
        if self.messages.is_empty() {
            return Err("request has no messages".into());
        }
        if self.messages.iter().any(|m| m.content.trim().is_empty()) {
            return Err("message content must be non-empty".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if self.max_output_tokens == 0 {
            return Err("max_output_tokens must be positive".into());
        }
        Ok(())
    }

    pub fn with_tag(mut self, key: &str, value: impl ToString) -> Self {
        self.tags.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.get(key).map(String::as_str)
    }

    /// All message text joined, for logging and assertions.
    pub fn text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}
