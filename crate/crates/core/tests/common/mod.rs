#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use chrono::TimeZone;
use counterquill_core::clock::ManualClock;
use counterquill_core::corpus::Corpus;
use counterquill_core::events::MemorySink;
use counterquill_core::learning::OptionLabel;
use counterquill_core::llm::{Gateway, MockProvider, Provider, RetryPolicy};
use counterquill_core::{Condition, Engine, EngineConfig, NewSession, SessionId, SpanKind, TextSpan};

pub const JOGGING: &str = "hs-03";
pub const KEY: [OptionLabel; 4] = [OptionLabel::C, OptionLabel::B, OptionLabel::D, OptionLabel::B];

pub fn fast_policy() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 3,
        initial_backoff: Duration::from_millis(1),
        deadline: Duration::from_secs(5),
    }
}

pub fn clock() -> Arc<ManualClock> {
    let start = chrono::Utc.with_ymd_and_hms(2024, 5, 1, 9, 0, 0).unwrap();
    Arc::new(ManualClock::new(start).with_step(chrono::Duration::seconds(1)))
}

pub fn engine_with(provider: Arc<dyn Provider>) -> Engine {
    Engine::new(
        Corpus::bundled(),
        Gateway::new(provider, fast_policy()),
        clock(),
        EngineConfig::default(),
        Box::new(MemorySink::default()),
    )
}

pub fn mock_engine() -> Engine {
    engine_with(Arc::new(MockProvider::new(1)))
}

pub fn id(start: usize, end: usize) -> TextSpan {
    TextSpan::new(start, end, SpanKind::Identity).unwrap()
}

pub fn act(start: usize, end: usize) -> TextSpan {
    TextSpan::new(start, end, SpanKind::Action).unwrap()
}

pub fn new_session(engine: &Engine, participant: &str, condition: Condition) -> SessionId {
    engine
        .create_session(NewSession {
            participant_id: participant.into(),
            condition,
            instance_id: Some(JOGGING.into()),
            demographics: Default::default(),
        })
        .unwrap()
        .id
}

/// A counterquill session on the jogging item, parked in brainstorm_highlight.
pub fn cq_at_highlights(engine: &Engine, participant: &str) -> SessionId {
    let s = new_session(engine, participant, Condition::Counterquill);
    engine.start_learning(&s).unwrap();
    engine.grade_quiz(&s, &KEY).unwrap();
    engine.start_highlight_practice(&s).unwrap();
    s
}

/// Same, continued through exact highlights and both answers, then writing.
pub fn cq_at_writing(engine: &Engine, participant: &str) -> SessionId {
    let s = cq_at_highlights(engine, participant);
    let out = engine.submit_highlights(&s, vec![id(15, 24)], vec![act(66, 77)]).unwrap();
    assert!(out.advanced);
    engine
        .submit_answer(&s, 1, "It assumes a black man is a threat just for being there.")
        .unwrap();
    engine
        .submit_answer(&s, 2, "They would feel watched and unwelcome in their own neighborhood.")
        .unwrap();
    engine.open_writing(&s).unwrap();
    s
}
