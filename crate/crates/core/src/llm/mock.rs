use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::gateway::{Provider, ProviderFailure};
use super::lexical::lexically_equivalent;
use super::{CompletionRequest, Purpose};

/// Offline provider with deterministic replies computed from the request tags.
///
/// Equivalence follows the lexical rule; suggestions and rewrites are
/// templated transforms of the input, varied by `seed` and the attempt tag.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    seed: u64,
    latency: Duration,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            latency: Duration::ZERO,
        }
    }

    /// Sleeps this long before every reply.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    fn pick<'a>(&self, options: &[&'a str], key: &str) -> &'a str {
        // FNV-1a over seed and key
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.seed;
        for b in key.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        options[(h % options.len() as u64) as usize]
    }

    fn equivalence(&self, req: &CompletionRequest) -> Result<String, ProviderFailure> {
        let (Some(gold), Some(sel)) = (req.tag("gold"), req.tag("selection")) else {
            return Err(missing_tags());
        };
        let focus = req.tag("focus").unwrap_or("selected");
        if lexically_equivalent(sel, gold) {
            Ok(format!("Yes. Your {focus} highlight captures the reference answer."))
        } else {
            Ok(format!(
                "No. Your {focus} highlight \"{sel}\" misses what the statement actually targets. \
Reread the sentence and look for the words that carry the {focus}."
            ))
        }
    }

    fn suggestion(&self, req: &CompletionRequest) -> Result<String, ProviderFailure> {
        let (Some(q), Some(a)) = (req.tag("question"), req.tag("answer")) else {
            return Err(missing_tags());
        };
        let opener = self.pick(
            &[
                "Thank you for sharing your perspective.",
                "Thanks for thinking this through carefully.",
                "You raise a thoughtful point.",
            ],
            a,
        );
        let words = a.split_whitespace().count();
        let evaluation = if words < 8 {
            "Your answer is brief; naming the specific assumption and who it hurts would make it stronger."
        } else {
            "Your answer identifies the harm clearly; consider adding how the targeted person might feel reading it."
        };
        let focus = if q.contains("stereotypes") {
            "Point out the stereotype directly and offer a concrete fact or experience that contradicts it."
        } else {
            "Speak to the person being targeted as well as the speaker, and invite empathy rather than blame."
        };
        Ok(format!("{opener} {evaluation} {focus}"))
    }

    fn rewrite(&self, req: &CompletionRequest) -> Result<String, ProviderFailure> {
        let Some(sel) = req.tag("selected_text") else {
            return Err(missing_tags());
        };
        let base = tidy(sel);
        let body = match req.tag("mode").unwrap_or("grammar") {
            "empathetic" => format!(
                "I understand this may come from worry, but imagine being the person this is about. {base}"
            ),
            "use_note" => format!("{base} {}", req.tag("note").unwrap_or_default()),
            "custom" => format!("{base} [{}]", req.tag("instruction").unwrap_or_default()),
            _ => base,
        };
        match req.tag("attempt").and_then(|a| a.parse::<u32>().ok()) {
            Some(n) if n > 1 => Ok(format!("(take {n}) {body}")),
            _ => Ok(body),
        }
    }
}

fn missing_tags() -> ProviderFailure {
    ProviderFailure::Fatal {
        status: 400,
        body: "mock provider needs template tags".into(),
    }
}

/// Whitespace collapsed, first letter capitalized, terminal period ensured.
fn tidy(text: &str) -> String {
    let joined = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut chars = joined.chars();
    let mut out: String = match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    };
    if !out.ends_with(['.', '!', '?']) {
        out.push('.');
    }
    out
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn send(&self, request: &CompletionRequest, timeout: Duration) -> Result<String, ProviderFailure> {
        if !self.latency.is_zero() {
            if self.latency > timeout {
                std::thread::sleep(timeout);
                return Err(ProviderFailure::TimedOut);
            }
            std::thread::sleep(self.latency);
        }
        match request.purpose {
            Purpose::Equivalence => self.equivalence(request),
            Purpose::Suggestion => self.suggestion(request),
            Purpose::Rewrite => self.rewrite(request),
        }
    }
}

/// Replays a fixed list of outcomes, then hands off to a fallback provider
/// (or fails fatally when there is none). Records every request it sees.
pub struct ScriptedProvider {
    script: Mutex<VecDeque<Result<String, ProviderFailure>>>,
    fallback: Option<Arc<dyn Provider>>,
    calls: AtomicUsize,
    seen: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedProvider {
    pub fn new(script: Vec<Result<String, ProviderFailure>>) -> Self {
        Self {
            script: Mutex::new(script.into()),
            fallback: None,
            calls: AtomicUsize::new(0),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn then(mut self, fallback: Arc<dyn Provider>) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn push(&self, outcome: Result<String, ProviderFailure>) {
        self.script.lock().unwrap().push_back(outcome);
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl Provider for ScriptedProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    fn send(&self, request: &CompletionRequest, timeout: Duration) -> Result<String, ProviderFailure> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().unwrap().push(request.clone());
        let next = self.script.lock().unwrap().pop_front();
        match (next, &self.fallback) {
            (Some(outcome), _) => outcome,
            (None, Some(p)) => p.send(request, timeout),
            (None, None) => Err(ProviderFailure::Fatal {
                status: 500,
                body: "script exhausted".into(),
            }),
        }
    }
}
