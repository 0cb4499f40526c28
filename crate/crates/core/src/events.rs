//! Append-only JSON-lines event log.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brainstorm::{EquivalenceFeedback, HighlightSubmission};
use crate::cowrite::RewriteExchange;
use crate::domain::{Condition, InstanceId, Note, Participant, ParticipantId, SessionId, Stage};
use crate::learning::QuizResult;
use crate::study::QuestionnaireResponse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    SessionCreated {
        participant_id: ParticipantId,
        condition: Condition,
        instance_id: InstanceId,
        /// Set when this session enrolled a new participant.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        enrolled: Option<Participant>,
    },
    StageChange {
        from: Stage,
        to: Stage,
    },
    QuizGraded {
        result: QuizResult,
    },
    Highlight {
        submission: HighlightSubmission,
        feedback: EquivalenceFeedback,
    },
    Answer {
        question: u8,
        text: String,
        suggestion: String,
    },
    Note {
        note: Note,
    },
    DraftSave {
        revision: u32,
        content: String,
    },
    /// Insert or replace an exchange by id.
    Rewrite {
        exchange: RewriteExchange,
    },
    Questionnaire {
        response: QuestionnaireResponse,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub session_id: SessionId,
    pub ts: DateTime<Utc>,
    #[serde(flatten)]
    pub event: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("corrupt record at line {line} (byte offset {offset}): {reason}")]
    Corrupt { line: usize, offset: u64, reason: String },

    #[error("event {seq} cannot be applied: {reason}")]
    Inconsistent { seq: u64, reason: String },

    #[error("reading event log: {0}")]
    Io(String),
}

/// Parses a whole log. Stops at the first bad record and reports where it starts.
pub fn parse_log(bytes: &[u8]) -> Result<Vec<EventRecord>, ReplayError> {
    let mut out = Vec::new();
    let mut offset = 0usize;
    let mut line = 0usize;
    while offset < bytes.len() {
        line += 1;
        let rest = &bytes[offset..];
        let (record, terminated) = match rest.iter().position(|b| *b == b'\n') {
            Some(i) => (&rest[..i], true),
            None => (rest, false),
        };
        let corrupt = |reason: String| ReplayError::Corrupt {
            line,
            offset: offset as u64,
            reason,
        };
        let parsed: EventRecord = serde_json::from_slice(record).map_err(|e| {
            if terminated {
                corrupt(e.to_string())
            } else {
                corrupt(format!("truncated record: {e}"))
            }
        })?;
        if !terminated {
            return Err(corrupt("truncated record: missing newline".into()));
        }
        if let Some(prev) = out.last().map(|r: &EventRecord| r.seq) {
            if parsed.seq <= prev {
                return Err(corrupt(format!("sequence {} does not follow {prev}", parsed.seq)));
            }
        }
        out.push(parsed);
        offset += record.len() + 1;
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<Vec<EventRecord>, ReplayError> {
    match std::fs::read(path) {
        Ok(bytes) => parse_log(&bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(ReplayError::Io(e.to_string())),
    }
}

pub fn encode(record: &EventRecord) -> String {
    let mut s = serde_json::to_string(record).expect("events serialize");
    s.push('\n');
    s
}

pub trait EventSink: Send {
    fn append(&mut self, record: &EventRecord) -> std::io::Result<()>;
    /// Make everything appended so far durable.
    fn sync(&mut self) -> std::io::Result<()>;
}

/// Keeps encoded records in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub lines: Vec<String>,
}

impl EventSink for MemorySink {
    fn append(&mut self, record: &EventRecord) -> std::io::Result<()> {
        self.lines.push(encode(record));
        Ok(())
    }

    fn sync(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Appends to a file, flushing after each record.
#[derive(Debug)]
pub struct FileSink {
    out: BufWriter<File>,
}

impl FileSink {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }
}

impl EventSink for FileSink {
    fn append(&mut self, record: &EventRecord) -> std::io::Result<()> {
        self.out.write_all(encode(record).as_bytes())?;
        self.out.flush()
    }

    fn sync(&mut self) -> std::io::Result<()> {
        self.out.flush()?;
        self.out.get_ref().sync_all()
    }
}
