//! Session engine: validates commands against the stage machine, calls the
//! gateway outside the state lock, and records outcomes as events.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use crate::brainstorm::{
    joined_text, oracle_feedback, question_text, tutorial, BrainstormAnswer, EquivalenceFeedback, FeedbackSource,
    HighlightDiff, HighlightOutcome, HighlightPractice, HighlightSubmission, KindDiff, Suggestion,
};
use crate::clock::Clock;
use crate::corpus::Corpus;
use crate::cowrite::{apply_candidate, seed_draft, ExchangeStatus, RewriteExchange, Selection};
use crate::domain::{
    Condition, Draft, ExchangeId, HateSpeechInstance, InstanceId, Note, NoteId, NoteSource, Participant,
    ParticipantId, SessionId, SpanKind, Stage, StudySession, TextSpan,
};
use crate::error::{Error, Result};
use crate::events::{read_log, EventKind, EventRecord, EventSink, FileSink};
use crate::learning::{get_curriculum, grade_answers, Curriculum, OptionLabel, QuizResult};
use crate::llm::lexical::lexically_equivalent;
use crate::llm::{
    render_equivalence_prompt, render_rewrite_prompt, render_suggestion_prompt, split_verdict,
    EquivalencePromptInputs, Gateway, RewriteMode, SuggestionPromptInputs,
};
use crate::spans::slice;
use crate::stage::{transition, Action};
use crate::state::{SessionState, StudyState};
use crate::study::{check_items, export_dataset, Instrument, QuestionnaireResponse};

pub const EVENT_LOG_FILE: &str = "events.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    /// Highlight submissions after which the session moves on regardless.
    pub attempt_cap: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { attempt_cap: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewSession {
    pub participant_id: ParticipantId,
    pub condition: Condition,
    #[serde(default)]
    pub instance_id: Option<InstanceId>,
    #[serde(default)]
    pub demographics: BTreeMap<String, String>,
}

/// Read model for one session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session: StudySession,
    pub quiz: Option<QuizResult>,
    pub highlight_attempts: u32,
    pub answers: Vec<BrainstormAnswer>,
    pub suggestions: Vec<Suggestion>,
    pub notes: usize,
    pub draft_revision: Option<u32>,
    pub exchanges: Vec<RewriteExchange>,
    pub questionnaires: Vec<QuestionnaireResponse>,
}

struct Inner {
    state: StudyState,
    sink: Box<dyn EventSink>,
    in_flight: HashSet<SessionId>,
}

pub struct Engine {
    corpus: Corpus,
    gateway: Gateway,
    clock: Arc<dyn Clock>,
    config: EngineConfig,
    inner: Mutex<Inner>,
}

/// Marks a session busy while a gateway call runs; cleared on drop.
struct Flight<'a> {
    engine: &'a Engine,
    id: SessionId,
}

impl Drop for Flight<'_> {
    fn drop(&mut self) {
        self.engine.lock().in_flight.remove(&self.id);
    }
}

fn session<'a>(state: &'a StudyState, id: &SessionId) -> Result<&'a SessionState> {
    state
        .session(id)
        .ok_or_else(|| Error::NotFound(format!("session {id}")))
}

/// Stage reached by `action`, or a stage error.
fn require(s: &SessionState, action: Action) -> Result<Stage> {
    let (cond, stage) = (s.session.condition, s.session.stage);
    transition(cond, stage, action)
        .ok_or_else(|| Error::Stage(format!("{action:?} is not allowed in stage {stage} ({cond} session)")))
}

fn stage_change(s: &SessionState, to: Stage) -> EventKind {
    EventKind::StageChange {
        from: s.session.stage,
        to,
    }
}

impl Engine {
    pub fn new(
        corpus: Corpus,
        gateway: Gateway,
        clock: Arc<dyn Clock>,
        config: EngineConfig,
        sink: Box<dyn EventSink>,
    ) -> Self {
        Self::with_state(corpus, gateway, clock, config, sink, StudyState::default())
    }

    fn with_state(
        corpus: Corpus,
        gateway: Gateway,
        clock: Arc<dyn Clock>,
        config: EngineConfig,
        sink: Box<dyn EventSink>,
        state: StudyState,
    ) -> Self {
        Self {
            corpus,
            gateway,
            clock,
            config,
            inner: Mutex::new(Inner {
                state,
                sink,
                in_flight: HashSet::new(),
            }),
        }
    }

    /// Rebuilds state from `records`; new events go to `sink`.
    pub fn from_events(
        corpus: Corpus,
        gateway: Gateway,
        clock: Arc<dyn Clock>,
        config: EngineConfig,
        records: &[EventRecord],
        sink: Box<dyn EventSink>,
    ) -> Result<Self> {
        let state = StudyState::replay(records)?;
        Ok(Self::with_state(corpus, gateway, clock, config, sink, state))
    }

    /// Replays `<data_dir>/events.jsonl` if present and appends to it.
    pub fn open(
        data_dir: &Path,
        corpus: Corpus,
        gateway: Gateway,
        clock: Arc<dyn Clock>,
        config: EngineConfig,
    ) -> Result<Self> {
        std::fs::create_dir_all(data_dir)?;
        let path = data_dir.join(EVENT_LOG_FILE);
        let records = read_log(&path)?;
        let sink = FileSink::open(&path)?;
        tracing::info!(events = records.len(), path = %path.display(), "replayed event log");
        Self::from_events(corpus, gateway, clock, config, &records, Box::new(sink))
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        // state is only mutated through `apply`, which is all-or-nothing, so a
        // poisoned lock still guards consistent data
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn sync(&self) -> Result<()> {
        Ok(self.lock().sink.sync()?)
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn provider_name(&self) -> &str {
        self.gateway.provider_name()
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    /// A copy of the current state.
    pub fn snapshot(&self) -> StudyState {
        self.lock().state.clone()
    }

    fn commit(&self, inner: &mut Inner, id: &SessionId, events: Vec<EventKind>) -> Result<()> {
        for event in events {
            let rec = EventRecord {
                seq: inner.state.last_seq + 1,
                session_id: id.clone(),
                ts: self.clock.now(),
                event,
            };
            inner.state.apply(&rec)?;
            inner.sink.append(&rec)?;
        }
        Ok(())
    }

    fn check_idle(inner: &Inner, id: &SessionId) -> Result<()> {
        if inner.in_flight.contains(id) {
            Err(Error::Busy(id.to_string()))
        } else {
            Ok(())
        }
    }

    fn start_flight(&self, inner: &mut Inner, id: &SessionId) -> Flight<'_> {
        inner.in_flight.insert(id.clone());
        Flight {
            engine: self,
            id: id.clone(),
        }
    }

    fn instance(&self, id: &InstanceId) -> Result<&HateSpeechInstance> {
        self.corpus
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("instance {id} is not in the corpus")))
    }

    pub fn create_session(&self, req: NewSession) -> Result<StudySession> {
        if req.participant_id.as_str().trim().is_empty() {
            return Err(Error::InvalidArgument("participant_id must be non-empty".into()));
        }
        let mut inner = self.lock();
        let state = &inner.state;
        if state
            .sessions
            .values()
            .any(|s| s.session.participant_id == req.participant_id && s.session.condition == req.condition)
        {
            return Err(Error::Duplicate(format!(
                "participant {} already has a {} session",
                req.participant_id, req.condition
            )));
        }
        let enrolled = match state.participants.get(&req.participant_id) {
            Some(_) => None,
            None => Some(Participant {
                id: req.participant_id.clone(),
                index: state.participants.len() as u32,
                demographics: req.demographics.clone(),
            }),
        };
        let index = enrolled
            .as_ref()
            .or_else(|| state.participants.get(&req.participant_id))
            .map(|p| p.index)
            .expect("participant known or being enrolled");
        let instance_id = match req.instance_id {
            Some(id) => self.instance(&id)?.id.clone(),
            None => {
                if self.corpus.is_empty() {
                    return Err(Error::Corpus("corpus is empty".into()));
                }
                let k = (index as usize * 2 + req.condition as usize) % self.corpus.len();
                self.corpus.iter().nth(k).expect("k < len").id.clone()
            }
        };
        let id = SessionId(format!("s{:04}", state.sessions.len() + 1));
        let event = EventKind::SessionCreated {
            participant_id: req.participant_id,
            condition: req.condition,
            instance_id,
            enrolled,
        };
        self.commit(&mut inner, &id, vec![event])?;
        Ok(inner.state.sessions[&id].session.clone())
    }

    pub fn start_learning(&self, id: &SessionId) -> Result<&'static Curriculum> {
        let mut inner = self.lock();
        Self::check_idle(&inner, id)?;
        let s = session(&inner.state, id)?;
        let to = require(s, Action::StartLearning)?;
        let ev = stage_change(s, to);
        self.commit(&mut inner, id, vec![ev])?;
        Ok(get_curriculum())
    }

    pub fn grade_quiz(&self, id: &SessionId, answers: &[OptionLabel]) -> Result<QuizResult> {
        let result = grade_answers(id, answers)?;
        let mut inner = self.lock();
        Self::check_idle(&inner, id)?;
        let s = session(&inner.state, id)?;
        if let Some(prev) = &s.quiz {
            return if prev.answers == answers {
                Ok(prev.clone())
            } else {
                Err(Error::Stage("quiz result is frozen once graded".into()))
            };
        }
        let to = require(s, Action::GradeQuiz)?;
        let events = vec![
            EventKind::QuizGraded {
                result: result.clone(),
            },
            stage_change(s, to),
        ];
        self.commit(&mut inner, id, events)?;
        Ok(result)
    }

    pub fn start_highlight_practice(&self, id: &SessionId) -> Result<HighlightPractice> {
        let mut inner = self.lock();
        Self::check_idle(&inner, id)?;
        let s = session(&inner.state, id)?;
        let to = require(s, Action::StartHighlightPractice)?;
        let instance = self.instance(&s.session.instance_id)?;
        let ev = stage_change(s, to);
        self.commit(&mut inner, id, vec![ev])?;
        Ok(HighlightPractice {
            instance: instance.into(),
            tutorial: tutorial(),
        })
    }

    /// Grades one kind with the model, re-asking once on an unparseable
    /// reply, and falls back to the lexical oracle on any failure.
    fn grade_kind(&self, inputs: &EquivalencePromptInputs, gold: &str, selection: &str) -> Result<(bool, Option<String>, FeedbackSource)> {
        let req = render_equivalence_prompt(inputs)?;
        for ask in 1..=2 {
            match self.gateway.complete(&req) {
                Ok(reply) => match split_verdict(&reply) {
                    Ok((v, rest)) => {
                        let fb = (!rest.is_empty()).then(|| rest.to_owned());
                        return Ok((v, fb, FeedbackSource::Model));
                    }
                    Err(e) => tracing::warn!(ask, error = %e, "equivalence reply unparseable"),
                },
                Err(e) => {
                    tracing::warn!(error = %e, "equivalence call failed, using lexical oracle");
                    break;
                }
            }
        }
        Ok((lexically_equivalent(selection, gold), None, FeedbackSource::Oracle))
    }

    pub fn submit_highlights(
        &self,
        id: &SessionId,
        identity_selection: Vec<TextSpan>,
        action_selection: Vec<TextSpan>,
    ) -> Result<HighlightOutcome> {
        let (flight, submission, inputs, golds) = {
            let mut inner = self.lock();
            Self::check_idle(&inner, id)?;
            let s = session(&inner.state, id)?;
            require(s, Action::SubmitHighlights)?;
            let instance = self.instance(&s.session.instance_id)?;
            let submission = HighlightSubmission {
                session_id: id.clone(),
                identity_selection,
                action_selection,
                attempt: s.highlights.len() as u32 + 1,
            };
            submission.check(&instance.text)?;
            let text = &instance.text;
            let gold_identity = joined_text(text, &instance.gold_identity)?;
            let gold_action = joined_text(text, &instance.gold_action)?;
            let inputs = EquivalencePromptInputs {
                hatespeech: text.clone(),
                identity: gold_identity.clone(),
                action: gold_action.clone(),
                user_selection_1: joined_text(text, &submission.identity_selection)?,
                user_selection_2: joined_text(text, &submission.action_selection)?,
                focus: SpanKind::Identity,
            };
            let flight = self.start_flight(&mut inner, id);
            (flight, submission, inputs, (gold_identity, gold_action))
        };

        let (id_ok, id_fb, id_src) = self.grade_kind(&inputs, &golds.0, &inputs.user_selection_1)?;
        let action_inputs = EquivalencePromptInputs {
            focus: SpanKind::Action,
            ..inputs.clone()
        };
        let (act_ok, act_fb, act_src) = self.grade_kind(&action_inputs, &golds.1, &inputs.user_selection_2)?;

        let mut parts = Vec::new();
        for (ok, fb, kind) in [(id_ok, id_fb, SpanKind::Identity), (act_ok, act_fb, SpanKind::Action)] {
            if !ok {
                parts.push(fb.unwrap_or_else(|| oracle_feedback(kind)));
            }
        }
        let feedback = EquivalenceFeedback {
            identity_equivalent: id_ok,
            action_equivalent: act_ok,
            feedback_text: parts.join(" "),
            source: if id_src == FeedbackSource::Model && act_src == FeedbackSource::Model {
                FeedbackSource::Model
            } else {
                FeedbackSource::Oracle
            },
        };

        let mut inner = self.lock();
        let s = session(&inner.state, id)?;
        let attempt = submission.attempt;
        let advanced = feedback.both() || attempt >= self.config.attempt_cap;
        let mut events = vec![EventKind::Highlight {
            submission,
            feedback: feedback.clone(),
        }];
        if advanced {
            let to = require(s, Action::FinishHighlights)?;
            events.push(stage_change(s, to));
        }
        self.commit(&mut inner, id, events)?;
        drop(inner);
        drop(flight);
        Ok(HighlightOutcome {
            attempt,
            feedback,
            advanced,
        })
    }

    pub fn view_diff(&self, id: &SessionId) -> Result<HighlightDiff> {
        let inner = self.lock();
        let s = session(&inner.state, id)?;
        let last = s
            .highlights
            .last()
            .ok_or_else(|| Error::NotFound(format!("session {id} has no highlight submission")))?;
        let instance = self.instance(&s.session.instance_id)?;
        let kind_diff = |kind: SpanKind| -> Result<KindDiff> {
            let user = last.submission.selection(kind).to_vec();
            let gold = instance.gold(kind).to_vec();
            Ok(KindDiff {
                user_text: joined_text(&instance.text, &user)?,
                gold_text: joined_text(&instance.text, &gold)?,
                user,
                gold,
            })
        };
        Ok(HighlightDiff {
            attempt: last.submission.attempt,
            identity: kind_diff(SpanKind::Identity)?,
            action: kind_diff(SpanKind::Action)?,
        })
    }

    pub fn submit_answer(&self, id: &SessionId, question: u8, text: &str) -> Result<Suggestion> {
        let q_text = question_text(question)?;
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument("answer text must be non-empty".into()));
        }
        let flight = {
            let mut inner = self.lock();
            Self::check_idle(&inner, id)?;
            let s = session(&inner.state, id)?;
            require(s, Action::SubmitAnswer)?;
            self.start_flight(&mut inner, id)
        };
        let req = render_suggestion_prompt(&SuggestionPromptInputs {
            question: q_text.to_owned(),
            user_answer: text.to_owned(),
        })?;
        let suggestion = self.gateway.complete(&req)?;

        let mut inner = self.lock();
        let ev = EventKind::Answer {
            question,
            text: text.to_owned(),
            suggestion,
        };
        self.commit(&mut inner, id, vec![ev])?;
        let out = inner.state.sessions[id].suggestions[&question].clone();
        drop(inner);
        drop(flight);
        Ok(out)
    }

    pub fn take_note(&self, id: &SessionId, source: NoteSource, selected_text: &str) -> Result<Note> {
        if selected_text.trim().is_empty() {
            return Err(Error::InvalidArgument("note text must be non-empty".into()));
        }
        let mut inner = self.lock();
        Self::check_idle(&inner, id)?;
        let s = session(&inner.state, id)?;
        if s.session.stage == Stage::Complete {
            return Err(Error::Stage("session is complete".into()));
        }
        let sources: Vec<&str> = match source {
            NoteSource::Question1 => s.suggestions.get(&1).map(|x| x.text.as_str()).into_iter().collect(),
            NoteSource::Question2 => s.suggestions.get(&2).map(|x| x.text.as_str()).into_iter().collect(),
            NoteSource::HighlightFeedback => s.highlights.iter().map(|h| h.feedback.feedback_text.as_str()).collect(),
        };
        if sources.is_empty() {
            return Err(Error::Provenance(format!("no {source:?} text to take notes from yet")));
        }
        if !sources.iter().any(|src| src.contains(selected_text)) {
            return Err(Error::Provenance(format!(
                "selected text is not part of the {source:?} text"
            )));
        }
        let note = Note {
            id: NoteId(format!("n{}", inner.state.last_seq + 1)),
            session_id: id.clone(),
            source,
            text: selected_text.to_owned(),
            created_at: self.clock.now(),
        };
        self.commit(&mut inner, id, vec![EventKind::Note { note: note.clone() }])?;
        Ok(note)
    }

    pub fn list_notes(&self, id: &SessionId) -> Result<Vec<Note>> {
        let inner = self.lock();
        Ok(session(&inner.state, id)?.notes.clone())
    }

    pub fn open_writing(&self, id: &SessionId) -> Result<Draft> {
        let mut inner = self.lock();
        Self::check_idle(&inner, id)?;
        let s = session(&inner.state, id)?;
        let to = require(s, Action::OpenWriting)?;
        let content = match s.session.condition {
            Condition::Baseline => String::new(),
            Condition::Counterquill => match (s.answers.get(&1), s.answers.get(&2)) {
                (Some(a1), Some(a2)) => seed_draft(&a1.text, &a2.text),
                _ => {
                    return Err(Error::Precondition(
                        "both brainstorming questions must be answered before writing".into(),
                    ))
                }
            },
        };
        let events = vec![stage_change(s, to), EventKind::DraftSave { revision: 1, content }];
        self.commit(&mut inner, id, events)?;
        Ok(inner.state.sessions[id].drafts[0].clone())
    }

    pub fn save_draft(&self, id: &SessionId, content: &str) -> Result<Draft> {
        let mut inner = self.lock();
        Self::check_idle(&inner, id)?;
        let s = session(&inner.state, id)?;
        require(s, Action::SaveDraft)?;
        let revision = s.drafts.len() as u32 + 1;
        let ev = EventKind::DraftSave {
            revision,
            content: content.to_owned(),
        };
        self.commit(&mut inner, id, vec![ev])?;
        Ok(inner.state.sessions[id].current_draft().expect("just saved").clone())
    }

    /// The given revision, or the latest.
    pub fn draft(&self, id: &SessionId, revision: Option<u32>) -> Result<Draft> {
        let inner = self.lock();
        let s = session(&inner.state, id)?;
        let d = match revision {
            None => s.current_draft(),
            Some(0) => None,
            Some(r) => s.drafts.get(r as usize - 1),
        };
        d.cloned().ok_or_else(|| match revision {
            Some(r) => Error::NotFound(format!("draft revision {r} of session {id}")),
            None => Error::NotFound(format!("session {id} has no draft")),
        })
    }

    pub fn draft_history(&self, id: &SessionId) -> Result<Vec<Draft>> {
        let inner = self.lock();
        Ok(session(&inner.state, id)?.drafts.clone())
    }

    fn next_exchange_id(state: &StudyState, offset: usize) -> ExchangeId {
        ExchangeId(format!("x{:05}", state.exchange_sessions.len() + offset + 1))
    }

    pub fn request_rewrite(&self, id: &SessionId, selection: Selection, mode: RewriteMode) -> Result<RewriteExchange> {
        mode.validate()?;
        let (flight, req, revision, stale) = {
            let mut inner = self.lock();
            Self::check_idle(&inner, id)?;
            let s = session(&inner.state, id)?;
            require(s, Action::RequestRewrite)?;
            let draft = s
                .current_draft()
                .ok_or_else(|| Error::Precondition("no draft to rewrite".into()))?;
            selection.check(&draft.content)?;
            let stale = match s.pending_exchange() {
                Some(p) if p.revision == draft.revision => {
                    return Err(Error::Busy(format!(
                        "session {id} has pending rewrite {}; insert or retry it first",
                        p.id
                    )))
                }
                Some(p) => Some(p.clone()),
                None => None,
            };
            let selected = slice(&draft.content, selection.start, selection.end)?;
            let req = render_rewrite_prompt(&mode, selected, &s.notes, &draft.content)?.with_tag("attempt", 1);
            let revision = draft.revision;
            (self.start_flight(&mut inner, id), req, revision, stale)
        };
        let outcome = self.gateway.complete(&req);

        let mut inner = self.lock();
        let mut events = Vec::new();
        if let Some(mut old) = stale {
            old.status = ExchangeStatus::Discarded;
            events.push(EventKind::Rewrite { exchange: old });
        }
        let exchange = RewriteExchange {
            id: Self::next_exchange_id(&inner.state, 0),
            session_id: id.clone(),
            selection,
            revision,
            mode,
            candidate_text: outcome.clone().unwrap_or_default(),
            status: if outcome.is_ok() {
                ExchangeStatus::Pending
            } else {
                ExchangeStatus::Discarded
            },
            attempt: 1,
            error: outcome.as_ref().err().map(ToString::to_string),
        };
        events.push(EventKind::Rewrite {
            exchange: exchange.clone(),
        });
        self.commit(&mut inner, id, events)?;
        drop(inner);
        drop(flight);
        outcome?;
        Ok(exchange)
    }

    fn exchange_session(state: &StudyState, exchange_id: &ExchangeId) -> Result<SessionId> {
        state
            .exchange_sessions
            .get(exchange_id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("rewrite {exchange_id}")))
    }

    /// Checks the exchange is pending and bound to the current revision.
    fn live_exchange<'a>(s: &'a SessionState, exchange_id: &ExchangeId) -> Result<(&'a RewriteExchange, &'a Draft)> {
        let ex = s
            .exchange(exchange_id)
            .ok_or_else(|| Error::NotFound(format!("rewrite {exchange_id}")))?;
        if ex.status != ExchangeStatus::Pending {
            return Err(Error::Precondition(format!(
                "rewrite {exchange_id} is {:?}, not pending",
                ex.status
            )));
        }
        let draft = s.current_draft().expect("exchanges only exist once a draft does");
        if draft.revision != ex.revision {
            return Err(Error::Conflict(format!(
                "rewrite {exchange_id} was made against revision {}, draft is now at revision {}",
                ex.revision, draft.revision
            )));
        }
        Ok((ex, draft))
    }

    pub fn insert_result(&self, exchange_id: &ExchangeId) -> Result<Draft> {
        let mut inner = self.lock();
        let id = Self::exchange_session(&inner.state, exchange_id)?;
        Self::check_idle(&inner, &id)?;
        let s = session(&inner.state, &id)?;
        require(s, Action::InsertRewrite)?;
        let (ex, draft) = Self::live_exchange(s, exchange_id)?;
        let content = apply_candidate(&draft.content, ex)?;
        let mut inserted = ex.clone();
        inserted.status = ExchangeStatus::Inserted;
        let events = vec![
            EventKind::DraftSave {
                revision: draft.revision + 1,
                content,
            },
            EventKind::Rewrite { exchange: inserted },
        ];
        self.commit(&mut inner, &id, events)?;
        Ok(inner.state.sessions[&id].current_draft().expect("just saved").clone())
    }

    pub fn retry_rewrite(&self, exchange_id: &ExchangeId) -> Result<RewriteExchange> {
        let (flight, id, prior, req) = {
            let mut inner = self.lock();
            let id = Self::exchange_session(&inner.state, exchange_id)?;
            Self::check_idle(&inner, &id)?;
            let s = session(&inner.state, &id)?;
            require(s, Action::RetryRewrite)?;
            let (ex, draft) = Self::live_exchange(s, exchange_id)?;
            let selected = slice(&draft.content, ex.selection.start, ex.selection.end)?;
            let req = render_rewrite_prompt(&ex.mode, selected, &s.notes, &draft.content)?
                .with_tag("attempt", ex.attempt + 1);
            let prior = ex.clone();
            (self.start_flight(&mut inner, &id), id, prior, req)
        };
        let outcome = self.gateway.complete(&req);

        let mut inner = self.lock();
        let mut events = Vec::new();
        let fresh = RewriteExchange {
            id: Self::next_exchange_id(&inner.state, 0),
            candidate_text: outcome.clone().unwrap_or_default(),
            status: if outcome.is_ok() {
                ExchangeStatus::Pending
            } else {
                ExchangeStatus::Discarded
            },
            attempt: prior.attempt + 1,
            error: outcome.as_ref().err().map(ToString::to_string),
            ..prior.clone()
        };
        if outcome.is_ok() {
            let mut retried = prior;
            retried.status = ExchangeStatus::Retried;
            events.push(EventKind::Rewrite { exchange: retried });
        }
        events.push(EventKind::Rewrite {
            exchange: fresh.clone(),
        });
        self.commit(&mut inner, &id, events)?;
        drop(inner);
        drop(flight);
        outcome?;
        Ok(fresh)
    }

    pub fn capture_questionnaire(
        &self,
        id: &SessionId,
        instrument: Instrument,
        items: Vec<u8>,
    ) -> Result<QuestionnaireResponse> {
        check_items(&items)?;
        let mut inner = self.lock();
        Self::check_idle(&inner, id)?;
        let s = session(&inner.state, id)?;
        let to = require(s, Action::SubmitQuestionnaire)?;
        if s.questionnaires.contains_key(&instrument) {
            return Err(Error::Duplicate(format!("{instrument:?} already captured for session {id}")));
        }
        let response = QuestionnaireResponse {
            session_id: id.clone(),
            instrument,
            items,
        };
        let mut events = vec![EventKind::Questionnaire {
            response: response.clone(),
        }];
        if to != s.session.stage {
            events.push(stage_change(s, to));
        }
        if s.questionnaires.len() + 1 == Instrument::ALL.len() {
            debug_assert_eq!(transition(s.session.condition, to, Action::Finish), Some(Stage::Complete));
            events.push(EventKind::StageChange {
                from: to,
                to: Stage::Complete,
            });
        }
        self.commit(&mut inner, id, events)?;
        Ok(response)
    }

    pub fn session_view(&self, id: &SessionId) -> Result<SessionView> {
        let inner = self.lock();
        let s = session(&inner.state, id)?;
        Ok(SessionView {
            session: s.session.clone(),
            quiz: s.quiz.clone(),
            highlight_attempts: s.highlights.len() as u32,
            answers: s.answers.values().cloned().collect(),
            suggestions: s.suggestions.values().cloned().collect(),
            notes: s.notes.len(),
            draft_revision: s.current_draft().map(|d| d.revision),
            exchanges: s.exchanges.clone(),
            questionnaires: s.questionnaires.values().cloned().collect(),
        })
    }

    pub fn session_ids(&self) -> Vec<SessionId> {
        self.lock().state.sessions.keys().cloned().collect()
    }

    pub fn export_csv(&self) -> String {
        export_dataset(&self.lock().state)
    }
}
