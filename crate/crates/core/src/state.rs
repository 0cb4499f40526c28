//! In-memory study state: a pure fold over the event log.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::brainstorm::{BrainstormAnswer, EquivalenceFeedback, HighlightSubmission, Suggestion};
use crate::cowrite::{ExchangeStatus, RewriteExchange};
use crate::domain::{Draft, ExchangeId, Note, Participant, ParticipantId, SessionId, Stage, StudySession};
use crate::events::{EventKind, EventRecord, ReplayError};
use crate::learning::QuizResult;
use crate::stage::{is_successor, stage_order};
use crate::study::{Instrument, QuestionnaireResponse};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HighlightRecord {
    pub submission: HighlightSubmission,
    pub feedback: EquivalenceFeedback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub session: StudySession,
    #[serde(skip)]
    pub stage_entered_at: DateTime<Utc>,
    pub quiz: Option<QuizResult>,
    pub highlights: Vec<HighlightRecord>,
    pub answers: BTreeMap<u8, BrainstormAnswer>,
    pub suggestions: BTreeMap<u8, Suggestion>,
    pub notes: Vec<Note>,
    /// `drafts[r - 1]` holds revision r.
    pub drafts: Vec<Draft>,
    pub exchanges: Vec<RewriteExchange>,
    pub questionnaires: BTreeMap<Instrument, QuestionnaireResponse>,
}

impl SessionState {
    pub fn current_draft(&self) -> Option<&Draft> {
        self.drafts.last()
    }

    pub fn pending_exchange(&self) -> Option<&RewriteExchange> {
        self.exchanges.iter().find(|e| e.status == ExchangeStatus::Pending)
    }

    pub fn exchange(&self, id: &ExchangeId) -> Option<&RewriteExchange> {
        self.exchanges.iter().find(|e| &e.id == id)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyState {
    pub participants: BTreeMap<ParticipantId, Participant>,
    pub sessions: BTreeMap<SessionId, SessionState>,
    pub exchange_sessions: BTreeMap<ExchangeId, SessionId>,
    pub last_seq: u64,
}

impl StudyState {
    pub fn replay<'a>(records: impl IntoIterator<Item = &'a EventRecord>) -> Result<Self, ReplayError> {
        let mut s = Self::default();
        for r in records {
            s.apply(r)?;
        }
        Ok(s)
    }

    pub fn session(&self, id: &SessionId) -> Option<&SessionState> {
        self.sessions.get(id)
    }

    /// Applies one record. Rejects records that do not fit the current state,
    /// leaving the state untouched.
    pub fn apply(&mut self, rec: &EventRecord) -> Result<(), ReplayError> {
        let fail = |reason: String| ReplayError::Inconsistent { seq: rec.seq, reason };
        if rec.seq <= self.last_seq {
            return Err(fail(format!("sequence {} not after {}", rec.seq, self.last_seq)));
        }

        if let EventKind::SessionCreated {
            participant_id,
            condition,
            instance_id,
            enrolled,
        } = &rec.event
        {
            if self.sessions.contains_key(&rec.session_id) {
                return Err(fail(format!("session {} already exists", rec.session_id)));
            }
            match enrolled {
                Some(p) => {
                    if &p.id != participant_id || self.participants.contains_key(&p.id) {
                        return Err(fail(format!("bad enrollment of {}", p.id)));
                    }
                    if self.participants.values().any(|q| q.index == p.index) {
                        return Err(fail(format!("participant index {} reused", p.index)));
                    }
                    self.participants.insert(p.id.clone(), p.clone());
                }
                None if !self.participants.contains_key(participant_id) => {
                    return Err(fail(format!("unknown participant {participant_id}")));
                }
                None => {}
            }
            let session = StudySession {
                id: rec.session_id.clone(),
                participant_id: participant_id.clone(),
                condition: *condition,
                instance_id: instance_id.clone(),
                stage: Stage::Created,
                stage_timings: BTreeMap::new(),
                created_at: rec.ts,
                updated_at: rec.ts,
            };
            self.sessions.insert(
                rec.session_id.clone(),
                SessionState {
                    session,
                    stage_entered_at: rec.ts,
                    quiz: None,
                    highlights: Vec::new(),
                    answers: BTreeMap::new(),
                    suggestions: BTreeMap::new(),
                    notes: Vec::new(),
                    drafts: Vec::new(),
                    exchanges: Vec::new(),
                    questionnaires: BTreeMap::new(),
                },
            );
            self.last_seq = rec.seq;
            return Ok(());
        }

        let s = self
            .sessions
            .get_mut(&rec.session_id)
            .ok_or_else(|| fail(format!("unknown session {}", rec.session_id)))?;
        match &rec.event {
            EventKind::SessionCreated { .. } => unreachable!("handled above"),
            EventKind::StageChange { from, to } => {
                let cond = s.session.condition;
                if s.session.stage != *from || !is_successor(cond, *from, *to) {
                    return Err(fail(format!(
                        "stage change {from} -> {to} illegal from {} ({cond})",
                        s.session.stage
                    )));
                }
                debug_assert!(stage_order(cond).contains(to));
                let secs = (rec.ts - s.stage_entered_at).num_microseconds().unwrap_or(i64::MAX) as f64 / 1e6;
                s.session.stage_timings.insert(*from, secs.max(0.0));
                s.session.stage = *to;
                s.stage_entered_at = rec.ts;
            }
            EventKind::QuizGraded { result } => {
                if s.quiz.is_some() {
                    return Err(fail("quiz already graded".into()));
                }
                s.quiz = Some(result.clone());
            }
            EventKind::Highlight { submission, feedback } => {
                s.highlights.push(HighlightRecord {
                    submission: submission.clone(),
                    feedback: feedback.clone(),
                });
            }
            EventKind::Answer {
                question,
                text,
                suggestion,
            } => {
                s.answers.insert(
                    *question,
                    BrainstormAnswer {
                        session_id: rec.session_id.clone(),
                        question: *question,
                        text: text.clone(),
                    },
                );
                s.suggestions.insert(
                    *question,
                    Suggestion {
                        session_id: rec.session_id.clone(),
                        question: *question,
                        text: suggestion.clone(),
                        generated_at: rec.ts,
                    },
                );
            }
            EventKind::Note { note } => s.notes.push(note.clone()),
            EventKind::DraftSave { revision, content } => {
                let want = s.drafts.len() as u32 + 1;
                if *revision != want {
                    return Err(fail(format!("draft revision {revision}, expected {want}")));
                }
                s.drafts.push(Draft {
                    session_id: rec.session_id.clone(),
                    content: content.clone(),
                    revision: *revision,
                    updated_at: rec.ts,
                });
            }
            EventKind::Rewrite { exchange } => {
                if exchange.session_id != rec.session_id {
                    return Err(fail("exchange belongs to another session".into()));
                }
                let other_pending = s
                    .exchanges
                    .iter()
                    .any(|e| e.id != exchange.id && e.status == ExchangeStatus::Pending);
                if other_pending && exchange.status == ExchangeStatus::Pending {
                    return Err(fail("more than one pending exchange".into()));
                }
                match s.exchanges.iter_mut().find(|e| e.id == exchange.id) {
                    Some(e) => *e = exchange.clone(),
                    None => {
                        if self.exchange_sessions.contains_key(&exchange.id) {
                            return Err(fail(format!("exchange id {} reused", exchange.id)));
                        }
                        s.exchanges.push(exchange.clone());
                        self.exchange_sessions.insert(exchange.id.clone(), rec.session_id.clone());
                    }
                }
            }
            EventKind::Questionnaire { response } => {
                if s.questionnaires.contains_key(&response.instrument) {
                    return Err(fail(format!("{:?} already captured", response.instrument)));
                }
                s.questionnaires.insert(response.instrument, response.clone());
            }
        }
        s.session.updated_at = rec.ts;
        self.last_seq = rec.seq;
        Ok(())
    }
}
