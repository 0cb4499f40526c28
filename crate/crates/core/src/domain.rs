//! Shared vocabulary: corpus items, spans, sessions, notes, drafts, participants.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::spans::{validate_spans, SpanViolation};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_type!(SessionId);
id_type!(ParticipantId);
id_type!(InstanceId);
id_type!(NoteId);
id_type!(ExchangeId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theme {
    Race,
    Gender,
    SexualOrientation,
    Disability,
    Religion,
}

impl Theme {
    pub const ALL: [Theme; 5] = [
        Theme::Race,
        Theme::Gender,
        Theme::SexualOrientation,
        Theme::Disability,
        Theme::Religion,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    Identity,
    Action,
}

impl SpanKind {
    pub fn label(self) -> &'static str {
        match self {
            SpanKind::Identity => "identity",
            SpanKind::Action => "dehumanizing action",
        }
    }
}

/// Half-open codepoint range `[start, end)` tagged with what it marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpan")]
pub struct TextSpan {
    pub start: usize,
    pub end: usize,
    pub kind: SpanKind,
}

#[derive(Deserialize)]
struct RawSpan {
    start: usize,
    end: usize,
    kind: SpanKind,
}

impl TryFrom<RawSpan> for TextSpan {
    type Error = String;

    fn try_from(raw: RawSpan) -> Result<Self, Self::Error> {
        TextSpan::new(raw.start, raw.end, raw.kind)
    }
}

impl TextSpan {
    pub fn new(start: usize, end: usize, kind: SpanKind) -> Result<Self, String> {
        if start >= end {
            return Err(format!("span [{start},{end}) must satisfy start < end"));
        }
        Ok(Self { start, end, kind })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &TextSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HateSpeechInstance {
    pub id: InstanceId,
    pub text: String,
    pub theme: Theme,
    pub gold_identity: Vec<TextSpan>,
    pub gold_action: Vec<TextSpan>,
}

impl HateSpeechInstance {
    /// Checks the structural invariants of a corpus item.
    pub fn check(&self) -> Result<(), String> {
        if self.gold_identity.is_empty() || self.gold_action.is_empty() {
            return Err(format!("{}: needs at least one gold span of each kind", self.id));
        }
        if let Some(s) = self.gold_identity.iter().find(|s| s.kind != SpanKind::Identity) {
            return Err(format!("{}: identity list holds {:?}", self.id, s));
        }
        if let Some(s) = self.gold_action.iter().find(|s| s.kind != SpanKind::Action) {
            return Err(format!("{}: action list holds {:?}", self.id, s));
        }
        let all: Vec<TextSpan> = self.gold_spans().collect();
        validate_spans(&self.text, &all).map_err(|v: Vec<SpanViolation>| {
            format!("{}: invalid gold spans {:?}", self.id, v)
        })
    }

    pub fn gold_spans(&self) -> impl Iterator<Item = TextSpan> + '_ {
        self.gold_identity.iter().chain(&self.gold_action).copied()
    }

    pub fn gold(&self, kind: SpanKind) -> &[TextSpan] {
        match kind {
            SpanKind::Identity => &self.gold_identity,
            SpanKind::Action => &self.gold_action,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    Counterquill,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Baseline, Condition::Counterquill];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Counterquill => "counterquill",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Condition::Baseline),
            "counterquill" => Ok(Condition::Counterquill),
            other => Err(format!("unknown condition {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Created,
    Learning,
    QuizDone,
    BrainstormHighlight,
    BrainstormQa,
    Writing,
    Questionnaire,
    Complete,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Created,
        Stage::Learning,
        Stage::QuizDone,
        Stage::BrainstormHighlight,
        Stage::BrainstormQa,
        Stage::Writing,
        Stage::Questionnaire,
        Stage::Complete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Created => "created",
            Stage::Learning => "learning",
            Stage::QuizDone => "quiz_done",
            Stage::BrainstormHighlight => "brainstorm_highlight",
            Stage::BrainstormQa => "brainstorm_qa",
            Stage::Writing => "writing",
            Stage::Questionnaire => "questionnaire",
            Stage::Complete => "complete",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySession {
    pub id: SessionId,
    pub participant_id: ParticipantId,
    pub condition: Condition,
    pub instance_id: InstanceId,
    pub stage: Stage,
    /// Seconds spent in each stage that has been left.
    pub stage_timings: BTreeMap<Stage, f64>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoteSource {
    Question1,
    Question2,
    HighlightFeedback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub id: NoteId,
    pub session_id: SessionId,
    pub source: NoteSource,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draft {
    pub session_id: SessionId,
    pub content: String,
    pub revision: u32,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    /// 0-based enrollment order.
    pub index: u32,
    #[serde(default)]
    pub demographics: BTreeMap<String, String>,
}
