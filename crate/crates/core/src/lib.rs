//! Session orchestration, prompt gateway, study harness and statistics for
//! guided counterspeech writing.
//!
//! The [`engine::Engine`] owns all session state. Every accepted command is
//! recorded as an [`events::EventRecord`]; replaying the log through
//! [`state::StudyState::replay`] rebuilds the same state.

pub mod brainstorm;
pub mod clock;
pub mod corpus;
pub mod cowrite;
pub mod domain;
pub mod engine;
pub mod error;
pub mod events;
pub mod learning;
pub mod llm;
pub mod spans;
pub mod stage;
pub mod state;
pub mod stats;
pub mod study;

pub use domain::{
    Condition, Draft, ExchangeId, HateSpeechInstance, InstanceId, Note, NoteId, NoteSource, Participant,
    ParticipantId, SessionId, SpanKind, Stage, StudySession, TextSpan, Theme,
};
pub use engine::{Engine, EngineConfig, NewSession, SessionView};
pub use error::{Error, Result};
