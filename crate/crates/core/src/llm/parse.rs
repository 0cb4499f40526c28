use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reply contains neither yes nor no: {0:?}")]
pub struct Unparseable(pub String);

/// Word tokens with their byte end offsets.
fn words(text: &str) -> impl Iterator<Item = (&str, usize)> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(move |w| {
            let start = w.as_ptr() as usize - text.as_ptr() as usize;
            (w, start + w.len())
        })
}

fn verdict(word: &str) -> Option<bool> {
    if word.eq_ignore_ascii_case("yes") {
        Some(true)
    } else if word.eq_ignore_ascii_case("no") {
        Some(false)
    } else {
        None
    }
}

/// Splits a reply into its yes/no verdict and whatever follows the verdict word.
///
/// A leading yes/no decides; otherwise the first yes or no anywhere does.
pub fn split_verdict(reply: &str) -> Result<(bool, &str), Unparseable> {
    let mut ws = words(reply);
    let hit = match ws.next() {
        Some((w, end)) if verdict(w).is_some() => Some((verdict(w).unwrap(), end)),
        Some(_) => ws.find_map(|(w, end)| verdict(w).map(|v| (v, end))),
        None => None,
    };
    let (v, end) = hit.ok_or_else(|| Unparseable(reply.to_owned()))?;
    let rest = reply[end..].trim_start_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation());
    Ok((v, rest.trim_end()))
}

pub fn parse_yes_no(reply: &str) -> Result<bool, Unparseable> {
    split_verdict(reply).map(|(v, _)| v)
}
