//! Highlighting practice and reflective Q&A payloads.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{HateSpeechInstance, InstanceId, SessionId, SpanKind, TextSpan, Theme};
use crate::error::{Error, Result};
use crate::llm::{QUESTION_1, QUESTION_2};
use crate::spans::{span_text, validate_spans};

pub const TUTORIAL_SENTENCE: &str =
    "I saw a random black man jogging nearby our house today and now I feel unsafe walking around my own neighborhood";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutorialExample {
    pub sentence: String,
    pub identity: TextSpan,
    pub identity_text: String,
    pub action: TextSpan,
    pub action_text: String,
    pub steps: Vec<String>,
}

pub fn tutorial() -> TutorialExample {
    let find = |needle: &str, kind| {
        let byte = TUTORIAL_SENTENCE.find(needle).expect("needle in tutorial");
        let start = TUTORIAL_SENTENCE[..byte].chars().count();
        TextSpan::new(start, start + needle.chars().count(), kind).expect("non-empty needle")
    };
    TutorialExample {
        sentence: TUTORIAL_SENTENCE.to_owned(),
        identity: find("black man", SpanKind::Identity),
        identity_text: "black man".into(),
        action: find("feel unsafe", SpanKind::Action),
        action_text: "feel unsafe".into(),
        steps: vec![
            "Select the words naming the person or group being targeted and mark them as identity (yellow).".into(),
            "Select the words describing what is said or done that dehumanizes them and mark them as action (green).".into(),
            "Press Done to compare your highlights with the reference answer, then View to see the differences.".into(),
        ],
    }
}

/// The instance as shown to a participant: no gold spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceView {
    pub id: InstanceId,
    pub text: String,
    pub theme: Theme,
}

impl From<&HateSpeechInstance> for InstanceView {
    fn from(i: &HateSpeechInstance) -> Self {
        Self {
            id: i.id.clone(),
            text: i.text.clone(),
            theme: i.theme,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightPractice {
    pub instance: InstanceView,
    pub tutorial: TutorialExample,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightSubmission {
    pub session_id: SessionId,
    pub identity_selection: Vec<TextSpan>,
    pub action_selection: Vec<TextSpan>,
    pub attempt: u32,
}

impl HighlightSubmission {
    pub fn selection(&self, kind: SpanKind) -> &[TextSpan] {
        match kind {
            SpanKind::Identity => &self.identity_selection,
            SpanKind::Action => &self.action_selection,
        }
    }

    /// Non-empty per kind, kinds matching their lists, in bounds, no same-kind overlap.
    pub fn check(&self, text: &str) -> Result<()> {
        for kind in [SpanKind::Identity, SpanKind::Action] {
            let spans = self.selection(kind);
            if spans.is_empty() {
                return Err(Error::InvalidArgument(format!("no {} highlight", kind.label())));
            }
            if let Some(s) = spans.iter().find(|s| s.kind != kind) {
                return Err(Error::InvalidArgument(format!(
                    "{} list holds a span of kind {:?}",
                    kind.label(),
                    s.kind
                )));
            }
        }
        let all: Vec<TextSpan> = self
            .identity_selection
            .iter()
            .chain(&self.action_selection)
            .copied()
            .collect();
        validate_spans(text, &all)
            .map_err(|v| Error::InvalidArgument(format!("invalid highlights: {}", serde_json::json!(v))))
    }
}

/// Span texts in document order, joined by a space.
pub fn joined_text(text: &str, spans: &[TextSpan]) -> Result<String> {
    let mut sorted = spans.to_vec();
    sorted.sort();
    let parts = sorted
        .iter()
        .map(|s| span_text(text, s).map(str::to_owned))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(parts.join(" "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSource {
    Model,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceFeedback {
    pub identity_equivalent: bool,
    pub action_equivalent: bool,
    pub feedback_text: String,
    pub source: FeedbackSource,
}

impl EquivalenceFeedback {
    pub fn both(&self) -> bool {
        self.identity_equivalent && self.action_equivalent
    }
}

/// Message used when the model's verdict is unavailable or carried no explanation.
pub fn oracle_feedback(kind: SpanKind) -> String {
    match kind {
        SpanKind::Identity => "Your identity highlight does not match the reference answer. Look again at which person or group the statement is about.".into(),
        SpanKind::Action => "Your dehumanizing action highlight does not match the reference answer. Look again at what the statement says or implies about them.".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightOutcome {
    pub attempt: u32,
    pub feedback: EquivalenceFeedback,
    /// Whether this submission moved the session on to the questions.
    pub advanced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindDiff {
    pub user: Vec<TextSpan>,
    pub user_text: String,
    pub gold: Vec<TextSpan>,
    pub gold_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightDiff {
    pub attempt: u32,
    pub identity: KindDiff,
    pub action: KindDiff,
}

pub fn question_text(question: u8) -> Result<&'static str> {
    match question {
        1 => Ok(QUESTION_1),
        2 => Ok(QUESTION_2),
        q => Err(Error::InvalidArgument(format!("question must be 1 or 2, got {q}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrainstormAnswer {
    pub session_id: SessionId,
    pub question: u8,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub session_id: SessionId,
    pub question: u8,
    pub text: String,
    pub generated_at: DateTime<Utc>,
}
