//! Draft seeding and selection-scoped rewrites.

use serde::{Deserialize, Serialize};

use crate::domain::{ExchangeId, SessionId};
use crate::error::{Error, Result};
use crate::llm::RewriteMode;
use crate::spans::{codepoint_len, splice};

/// Codepoint range into a draft revision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selection {
    pub start: usize,
    pub end: usize,
}

impl Selection {
    pub fn check(&self, content: &str) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::InvalidArgument(format!(
                "selection [{},{}) is empty or reversed",
                self.start, self.end
            )));
        }
        let len = codepoint_len(content);
        if self.end > len {
            return Err(Error::InvalidArgument(format!(
                "selection [{},{}) exceeds draft of {len} codepoints",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeStatus {
    Pending,
    Inserted,
    Retried,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteExchange {
    pub id: ExchangeId,
    pub session_id: SessionId,
    pub selection: Selection,
    /// Draft revision the selection refers to.
    pub revision: u32,
    pub mode: RewriteMode,
    pub candidate_text: String,
    pub status: ExchangeStatus,
    /// 1 for the first request, +1 per retry.
    pub attempt: u32,
    /// Gateway failure that discarded this exchange, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Initial draft from the two brainstorm answers.
pub fn seed_draft(answer1: &str, answer2: &str) -> String {
    format!("{answer1}\n\n{answer2}")
}

/// Content after inserting the exchange's candidate over its selection.
pub fn apply_candidate(content: &str, exchange: &RewriteExchange) -> Result<String> {
    let s = exchange.selection;
    Ok(splice(content, s.start, s.end, &exchange.candidate_text)?)
}
