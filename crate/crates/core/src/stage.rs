//! Session stage machine.
//!
//! counterquill: created → learning → quiz_done → brainstorm_highlight → brainstorm_qa
//! → writing → questionnaire → complete. baseline: created → writing → questionnaire
//! → complete. Data guards (both answers present, attempt cap, both questionnaires)
//! are checked by the engine; this table only knows stages.

use serde::{Deserialize, Serialize};

use crate::domain::{Condition, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    StartLearning,
    GradeQuiz,
    StartHighlightPractice,
    SubmitHighlights,
    FinishHighlights,
    SubmitAnswer,
    OpenWriting,
    SaveDraft,
    RequestRewrite,
    InsertRewrite,
    RetryRewrite,
    SubmitQuestionnaire,
    Finish,
}

impl Action {
    pub const ALL: [Action; 13] = [
        Action::StartLearning,
        Action::GradeQuiz,
        Action::StartHighlightPractice,
        Action::SubmitHighlights,
        Action::FinishHighlights,
        Action::SubmitAnswer,
        Action::OpenWriting,
        Action::SaveDraft,
        Action::RequestRewrite,
        Action::InsertRewrite,
        Action::RetryRewrite,
        Action::SubmitQuestionnaire,
        Action::Finish,
    ];
}

pub fn stage_order(condition: Condition) -> &'static [Stage] {
    use Stage::*;
    match condition {
        Condition::Counterquill => &[
            Created,
            Learning,
            QuizDone,
            BrainstormHighlight,
            BrainstormQa,
            Writing,
            Questionnaire,
            Complete,
        ],
        Condition::Baseline => &[Created, Writing, Questionnaire, Complete],
    }
}

/// Stage reached after `action` succeeds in `stage`, or `None` if the action is illegal there.
pub fn transition(condition: Condition, stage: Stage, action: Action) -> Option<Stage> {
    use Action::*;
    use Condition::*;
    use Stage::*;
    let next = match (condition, stage, action) {
        (Counterquill, Created, StartLearning) => Learning,
        (Counterquill, Learning, GradeQuiz) => QuizDone,
        (Counterquill, QuizDone, StartHighlightPractice) => BrainstormHighlight,
        (Counterquill, BrainstormHighlight, SubmitHighlights) => BrainstormHighlight,
        (Counterquill, BrainstormHighlight, FinishHighlights) => BrainstormQa,
        (Counterquill, BrainstormQa, SubmitAnswer) => BrainstormQa,
        (Counterquill, BrainstormQa, OpenWriting) => Writing,
        (Baseline, Created, OpenWriting) => Writing,
        (_, Writing, SaveDraft | RequestRewrite | InsertRewrite | RetryRewrite) => Writing,
        (_, Writing | Questionnaire, SubmitQuestionnaire) => Questionnaire,
        (_, Questionnaire, Finish) => Complete,
        _ => return None,
    };
    Some(next)
}

/// Whether `to` immediately follows `from` in the condition's legal order.
pub fn is_successor(condition: Condition, from: Stage, to: Stage) -> bool {
    stage_order(condition)
        .windows(2)
        .any(|w| w[0] == from && w[1] == to)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_stage_changing_transition_moves_one_step_forward() {
        for c in Condition::ALL {
            for s in Stage::ALL {
                for a in Action::ALL {
                    if let Some(next) = transition(c, s, a) {
                        assert!(next == s || is_successor(c, s, next), "{c} {s} {a:?} -> {next}");
                    }
                }
            }
        }
    }

    #[test]
    fn baseline_never_enters_learning_or_brainstorm() {
        for s in Stage::ALL {
            for a in Action::ALL {
                if let Some(next) = transition(Condition::Baseline, s, a) {
                    assert!(stage_order(Condition::Baseline).contains(&next));
                    assert!(stage_order(Condition::Baseline).contains(&s));
                }
            }
        }
    }

    #[test]
    fn complete_is_terminal() {
        for c in Condition::ALL {
            for a in Action::ALL {
                assert_eq!(transition(c, Stage::Complete, a), None);
            }
        }
    }
}
