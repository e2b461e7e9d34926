//! Deterministic text primitives shared by every pipeline stage.
//!
//! One tokenizer feeds ROUGE, tf-idf, and the fragment statistics so that
//! scores stay comparable across stages: split on whitespace, detach
//! (and drop) terminal punctuation, lowercase, and keep numerals such as
//! `$2.74` intact as single tokens.

mod mask;
mod numeral;

pub use mask::{mask_numerals, mask_text, unmask, MaskedSentence, Unmasked};
pub use numeral::{canonical_key, extract_numerals, scan_numerals, Numeral, NumeralUnit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("decoded text names placeholder `{name}` that the mask does not contain")]
    UnknownPlaceholder { name: String },
}

/// One sentence of a document, with its shared-tokenizer tokens and 0-based
/// position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<String>,
    pub index: usize,
}

impl Sentence {
    pub fn new(text: impl Into<String>, index: usize) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Self {
            text,
            tokens,
            index,
        }
    }
}

/// Punctuation detached from the end of a whitespace chunk. Kept small on
/// purpose: `%` and `$` belong to numerals and must survive.
const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '}'];

/// Whitespace tokenization with terminal punctuation dropped and everything
/// lowercased. `$2.74` and `27%` come through as single tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let trimmed = chunk.trim_end_matches(TRAILING_PUNCT);
        if !trimmed.is_empty() {
            tokens.push(trimmed.to_lowercase());
        }
    }
    tokens
}

/// Words that end with a period without ending a sentence. Compared
/// case-insensitively against the word left of a candidate boundary,
/// trailing period included.
pub const ABBREVIATIONS: &[&str] = &[
    "inc.", "corp.", "ltd.", "co.", "mr.", "mrs.", "ms.", "dr.", "jr.", "sr.", "q1.", "q2.",
    "q3.", "q4.", "u.s.", "u.k.", "vs.", "e.g.", "i.e.",
];

/// True when a terminal `.` at byte `dot` of `text` must not split, either
/// because the preceding word is a known abbreviation or because the period
/// belongs to a numeral.
fn suppressed_period(text: &str, dot: usize) -> bool {
    let head = &text[..dot];
    let word_start = head
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphanumeric() || *c == '.' || *c == '-' || *c == '&')
        .last()
        .map(|(i, _)| i)
        .unwrap_or(dot);
    let word = text[word_start..=dot].to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Split plain text into sentences.
///
/// A sentence boundary is a `.`, `?`, or `!` followed by whitespace or end
/// of input, except that a period never splits after a word in
/// [`ABBREVIATIONS`] and never splits inside a numeral (a decimal point is
/// followed by a digit, so it is never a candidate). Fragments left without
/// any token (stray punctuation runs) are folded into the neighboring
/// sentence so that no sentence ever has an empty token list.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    let mut boundaries = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c != '.' && c != '?' && c != '!' {
            continue;
        }
        let at_break = match chars.peek() {
            None => true,
            Some((_, next)) => next.is_whitespace(),
        };
        if at_break && !(c == '.' && suppressed_period(text, i)) {
            boundaries.push(i + c.len_utf8());
        }
    }
    boundaries.push(text.len());

    let mut sentences: Vec<Sentence> = Vec::new();
    let mut pending_prefix = String::new();
    let mut start = 0;
    for &end in &boundaries {
        if end <= start {
            continue;
        }
        let mut segment = text[start..end].trim().to_string();
        start = end;
        if segment.is_empty() {
            continue;
        }
        if !pending_prefix.is_empty() {
            segment = format!("{pending_prefix} {segment}");
            pending_prefix.clear();
        }
        if tokenize(&segment).is_empty() {
            // Punctuation-only fragment: keep the bytes, attach them to a
            // real sentence.
            match sentences.last_mut() {
                Some(prev) => {
                    prev.text.push(' ');
                    prev.text.push_str(&segment);
                }
                None => pending_prefix = segment,
            }
            continue;
        }
        let index = sentences.len();
        sentences.push(Sentence::new(segment, index));
    }
    sentences
}
