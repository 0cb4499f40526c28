use serde::{Deserialize, Serialize};

use super::{ChatMessage, CompletionRequest, Purpose, Role};
use crate::domain::{Note, SpanKind};
use crate::error::{Error, Result};

pub const QUESTION_1: &str =
    "What negative stereotypes or assumptions about the targeted group or individual are suggested by the statement?";
pub const QUESTION_2: &str = "Consider the feelings and experiences of someone who identifies with the group mentioned in the statement. How might this comment affect their sense of safety, belonging, or self-esteem?";

const EQUIVALENCE_TEMPERATURE: f32 = 0.0;
const CREATIVE_TEMPERATURE: f32 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalencePromptInputs {
    pub hatespeech: String,
    pub identity: String,
    pub action: String,
    pub user_selection_1: String,
    pub user_selection_2: String,
    /// Which of the two selections this query grades.
    pub focus: SpanKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionPromptInputs {
    pub question: String,
    pub user_answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum RewriteMode {
    Grammar,
    Empathetic,
    UseNote { note_index: u8 },
    Custom { instruction: String },
}

impl RewriteMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            RewriteMode::UseNote { note_index } if !(1..=2).contains(note_index) => Err(
                Error::InvalidArgument(format!("note_index must be 1 or 2, got {note_index}")),
            ),
            RewriteMode::Custom { instruction } if instruction.trim().is_empty() => {
                Err(Error::InvalidArgument("custom instruction must be non-empty".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RewriteMode::Grammar => "grammar",
            RewriteMode::Empathetic => "empathetic",
            RewriteMode::UseNote { .. } => "use_note",
            RewriteMode::Custom { .. } => "custom",
        }
    }
}

fn require(field: &str, value: &str) -> Result<()> {
    if value.trim().is_empty() {
        Err(Error::InvalidArgument(format!("{field} must be non-empty")))
    } else {
        Ok(())
    }
}

/// Asks whether the learner's highlights match the reference identity and action.
pub fn render_equivalence_prompt(inputs: &EquivalencePromptInputs) -> Result<CompletionRequest> {
    require("hatespeech", &inputs.hatespeech)?;
    require("identity", &inputs.identity)?;
    require("action", &inputs.action)?;
    require("user_selection_1", &inputs.user_selection_1)?;
    require("user_selection_2", &inputs.user_selection_2)?;

    let system = "You check a learner's highlights of a hate speech statement against reference \
answers. Begin your reply with Yes or No. If the answer is No, follow it with one or two \
sentences of corrective feedback addressed to the learner.";
    let content = format!(
        "{{ \"context\": \"The correct individual or a group's identity and dehumanizing action in the speech text '{hs}' is: '{id}' and '{act}' \",\n  \
\"query\": \"If the user selects '{s1}' as identity and '{s2}' as dehumanizing action, are they semantically equivalent to the correct answer?\",\n  \
\"focus\": \"Judge only the {focus} selection.\",\n  \
\"responseOptions\": [\"Yes\", \"No\"] }}",
        hs = inputs.hatespeech,
        id = inputs.identity,
        act = inputs.action,
        s1 = inputs.user_selection_1,
        s2 = inputs.user_selection_2,
        focus = inputs.focus.label(),
    );
    let (gold, selection) = match inputs.focus {
        SpanKind::Identity => (&inputs.identity, &inputs.user_selection_1),
        SpanKind::Action => (&inputs.action, &inputs.user_selection_2),
    };
    Ok(CompletionRequest {
        messages: vec![
            ChatMessage::new(Role::System, system),
            ChatMessage::new(Role::User, content),
        ],
        temperature: EQUIVALENCE_TEMPERATURE,
        max_output_tokens: 160,
        purpose: Purpose::Equivalence,
        tags: Default::default(),
    }
    .with_tag("focus", inputs.focus.label())
    .with_tag("gold", gold)
    .with_tag("selection", selection))
}

/// Feedback on a brainstorming answer: acknowledge, evaluate, then advise.
pub fn render_suggestion_prompt(inputs: &SuggestionPromptInputs) -> Result<CompletionRequest> {
    require("question", &inputs.question)?;
    require("user_answer", &inputs.user_answer)?;
    let task = format!(
        "Your task is to generate thoughtful and constructive counterspeech suggestions in response \
to a user's answer to the question: '{q}'\n\
- Begin by respectfully acknowledging the user's contribution and perspective. If the user \
expresses offensive or harmful views, kindly explain why such statements are problematic.\n\
- Next, provide a concise and insightful evaluation of the user's response. Offer either a \
thought-provoking observation that encourages further reflection or constructive feedback \
that helps the user refine their argument.\n\
- Conclude by offering clear and actionable advice on crafting effective counterspeech related \
to the issue at hand.",
        q = inputs.question
    );
    Ok(CompletionRequest {
        messages: vec![
            ChatMessage::new(Role::System, task),
            ChatMessage::new(Role::User, inputs.user_answer.clone()),
        ],
        temperature: CREATIVE_TEMPERATURE,
        max_output_tokens: 500,
        purpose: Purpose::Suggestion,
        tags: Default::default(),
    }
    .with_tag("question", &inputs.question)
    .with_tag("answer", &inputs.user_answer))
}

/// Selection-scoped rewrite. Only `selected_text` is to be transformed.
pub fn render_rewrite_prompt(
    mode: &RewriteMode,
    selected_text: &str,
    notes: &[Note],
    draft_context: &str,
) -> Result<CompletionRequest> {
    mode.validate()?;
    require("selected_text", selected_text)?;

    let directive = match mode {
        RewriteMode::Grammar => "Correct the grammar, spelling, and punctuation of the selected \
passage. Keep the wording otherwise as close to the original as possible."
            .to_owned(),
        RewriteMode::Empathetic => "Rewrite the selected passage in an empathetic tone. Humanize \
the people targeted by the hate speech, acknowledge the harm the statement can cause, and \
invite the speaker to consider how it would feel to be on the receiving end. Keep it calm and \
non-confrontational: no insults, sarcasm, or lecturing."
            .to_owned(),
        RewriteMode::UseNote { note_index } => {
            let note = notes.get(usize::from(*note_index) - 1).ok_or_else(|| {
                Error::NotFound(format!("note {note_index} (session has {} notes)", notes.len()))
            })?;
            format!(
                "Revise the selected passage so that it draws on this brainstorming note \
written by the user: \"{}\"",
                note.text
            )
        }
        RewriteMode::Custom { instruction } => format!(
            "Revise the selected passage according to the user's own instruction: \"{instruction}\""
        ),
    };

    let system = format!(
        "You help a person refine the counterspeech they are writing in response to hate speech. \
Transform ONLY the selected passage and preserve its meaning. Do not add a preamble, quotation \
marks, or commentary; reply with the rewritten passage alone.\n\n{directive}"
    );

    let mut user = String::new();
    user.push_str("Full draft, for context only:\n<<<\n");
    user.push_str(draft_context);
    user.push_str("\n>>>\n");
    if !notes.is_empty() {
        user.push_str("Brainstorming notes:\n");
        for (i, n) in notes.iter().enumerate() {
            user.push_str(&format!("{}. {}\n", i + 1, n.text));
        }
    }
    user.push_str("Selected passage to rewrite:\n<<<\n");
    user.push_str(selected_text);
    user.push_str("\n>>>");

    let mut req = CompletionRequest {
        messages: vec![
            ChatMessage::new(Role::System, system),
            ChatMessage::new(Role::User, user),
        ],
        temperature: CREATIVE_TEMPERATURE,
        max_output_tokens: 400,
        purpose: Purpose::Rewrite,
        tags: Default::default(),
    }
    .with_tag("mode", mode.label())
    .with_tag("selected_text", selected_text)
    .with_tag("context", draft_context);
    match mode {
        RewriteMode::UseNote { note_index } => {
            let note = &notes[usize::from(*note_index) - 1];
            req = req.with_tag("note", &note.text);
        }
        RewriteMode::Custom { instruction } => req = req.with_tag("instruction", instruction),
        _ => {}
    }
    Ok(req)
}
