//! Codepoint-indexed text operations: validation, slicing, splicing.
//!
//! All offsets are Unicode scalar value (codepoint) indices, never bytes.

use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::domain::TextSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("range [{start},{end}) invalid for text of {len} codepoints")]
pub struct RangeError {
    pub start: usize,
    pub end: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum SpanViolation {
    OutOfBounds { span: TextSpan, text_len: usize },
    /// `first` sorts before `second`; both have the same kind.
    Overlap { first: TextSpan, second: TextSpan },
}

pub fn codepoint_len(text: &str) -> usize {
    text.chars().count()
}

/// Maps a codepoint range onto the byte range of `text`.
pub fn byte_range(text: &str, start: usize, end: usize) -> Result<Range<usize>, RangeError> {
    let err = || RangeError {
        start,
        end,
        len: codepoint_len(text),
    };
    if start > end {
        return Err(err());
    }
    // codepoint boundaries, including the one past the last character
    let mut bounds = text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()));
    let b_start = bounds.nth(start).ok_or_else(err)?;
    let b_end = if end == start {
        b_start
    } else {
        bounds.nth(end - start - 1).ok_or_else(err)?
    };
    Ok(b_start..b_end)
}

/// Returns every span that falls outside `text` or overlaps another span of the same kind.
///
/// The result is sorted and deduplicated, so it does not depend on input order.
pub fn validate_spans(text: &str, spans: &[TextSpan]) -> Result<(), Vec<SpanViolation>> {
    let len = codepoint_len(text);
    let mut violations: Vec<SpanViolation> = spans
        .iter()
        .filter(|s| s.end > len)
        .map(|s| SpanViolation::OutOfBounds {
            span: *s,
            text_len: len,
        })
        .collect();

    let mut sorted = spans.to_vec();
    sorted.sort();
    for (i, a) in sorted.iter().enumerate() {
        for b in sorted[i + 1..].iter().take_while(|b| b.start < a.end) {
            if b.kind == a.kind {
                violations.push(SpanViolation::Overlap {
                    first: *a,
                    second: *b,
                });
            }
        }
    }
    violations.sort();
    violations.dedup();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

pub fn span_text<'a>(text: &'a str, span: &TextSpan) -> Result<&'a str, RangeError> {
    slice(text, span.start, span.end)
}

pub fn slice(text: &str, start: usize, end: usize) -> Result<&str, RangeError> {
    byte_range(text, start, end).map(|r| &text[r])
}

/// Replaces codepoints `[start, end)` of `text` with `replacement`.
pub fn splice(text: &str, start: usize, end: usize, replacement: &str) -> Result<String, RangeError> {
    let r = byte_range(text, start, end)?;
    let mut out = String::with_capacity(text.len() - r.len() + replacement.len());
    out.push_str(&text[..r.start]);
    out.push_str(replacement);
    out.push_str(&text[r.end..]);
    Ok(out)
}
