//! Lesson content and quiz grading.
//!
//! The quiz answer key is inferred by checking each option against the lesson
//! definitions (see `docs/quiz-key.md`); it never leaves the server.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::SessionId;
use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../data/curriculum.json");

pub const QUIZ_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptionLabel {
    A,
    B,
    C,
    D,
}

impl OptionLabel {
    pub const ALL: [OptionLabel; 4] = [OptionLabel::A, OptionLabel::B, OptionLabel::C, OptionLabel::D];
}

impl fmt::Display for OptionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Q1 → C, Q2 → B, Q3 → D, Q4 → B.
const ANSWER_KEY: [OptionLabel; QUIZ_LEN] = [OptionLabel::C, OptionLabel::B, OptionLabel::D, OptionLabel::B];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    HateSpeech,
    Counterspeech,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LessonSection {
    pub track: Track,
    pub ordinal: u8,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizOption {
    pub label: OptionLabel,
    pub text: String,
}

/// A quiz question as served to clients: the key is not part of this type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizQuestion {
    pub ordinal: u8,
    pub prompt: String,
    pub options: Vec<QuizOption>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curriculum {
    pub version: String,
    pub sections: Vec<LessonSection>,
    pub quiz: Vec<QuizQuestion>,
}

impl Curriculum {
    pub fn bundled() -> &'static Curriculum {
        static CURRICULUM: std::sync::OnceLock<Curriculum> = std::sync::OnceLock::new();
        CURRICULUM.get_or_init(|| {
            let mut c: Curriculum = serde_json::from_str(BUNDLED).expect("bundled curriculum parses");
            c.sections.sort_by_key(|s| (s.track, s.ordinal));
            c.quiz.sort_by_key(|q| q.ordinal);
            c.check().expect("bundled curriculum is well formed");
            c
        })
    }

    fn check(&self) -> std::result::Result<(), String> {
        for track in [Track::HateSpeech, Track::Counterspeech] {
            let ords: Vec<u8> = self
                .sections
                .iter()
                .filter(|s| s.track == track)
                .map(|s| s.ordinal)
                .collect();
            if ords != [1, 2, 3] {
                return Err(format!("{track:?} needs sections 1..3, got {ords:?}"));
            }
        }
        if self.quiz.len() != QUIZ_LEN {
            return Err(format!("quiz needs {QUIZ_LEN} questions"));
        }
        for q in &self.quiz {
            let labels: Vec<OptionLabel> = q.options.iter().map(|o| o.label).collect();
            if labels != OptionLabel::ALL {
                return Err(format!("question {} must have options A-D", q.ordinal));
            }
        }
        Ok(())
    }
}

pub fn get_curriculum() -> &'static Curriculum {
    Curriculum::bundled()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizResult {
    pub session_id: SessionId,
    pub answers: Vec<OptionLabel>,
    pub correct: Vec<bool>,
    pub n_correct: u8,
}

/// Grades four answers against the key.
pub fn grade_answers(session_id: &SessionId, answers: &[OptionLabel]) -> Result<QuizResult> {
    if answers.len() != QUIZ_LEN {
        return Err(Error::InvalidArgument(format!(
            "quiz takes exactly {QUIZ_LEN} answers, got {}",
            answers.len()
        )));
    }
    let correct: Vec<bool> = answers.iter().zip(ANSWER_KEY).map(|(a, k)| *a == k).collect();
    let n_correct = correct.iter().filter(|c| **c).count() as u8;
    Ok(QuizResult {
        session_id: session_id.clone(),
        answers: answers.to_vec(),
        correct,
        n_correct,
    })
}

/// Mean accuracy in percent over a set of graded quizzes.
pub fn accuracy_aggregate(results: &[QuizResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("no quiz results to aggregate".into()));
    }
    let total: u32 = results.iter().map(|r| u32::from(r.n_correct)).sum();
    Ok(100.0 * f64::from(total) / (QUIZ_LEN as f64 * results.len() as f64))
}
