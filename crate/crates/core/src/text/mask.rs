//! Reversible placeholder masking. Numerals are replaced left-to-right by
//! `[num-one]`, `[num-two]`, ... so a rewriter can rephrase a sentence
//! without ever seeing (or corrupting) its values, and the originals are
//! restored afterwards.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::numeral::scan_numerals;
use super::{Sentence, TextError};

/// A sentence with its numerals swapped for ordered placeholders. The
/// placeholder list pairs each name (brackets included) with the exact raw
/// substring it replaced, in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSentence {
    pub masked_text: String,
    pub placeholders: Vec<(String, String)>,
}

/// Result of unmmasking: the restored text plus any placeholder names the
/// decoded text dropped. Dropping is a warning-level outcome, not an error;
/// it signals that a rewriter lost a value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unmasked {
    pub text: String,
    pub dropped: Vec<String>,
}

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen",
];
const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

/// Hyphenated English word form of 1..=999, used for placeholder names.
fn ordinal_word(n: usize) -> String {
    debug_assert!((1..=999).contains(&n));
    if n < 20 {
        return ONES[n].to_string();
    }
    if n < 100 {
        let tens = TENS[n / 10];
        return if n.is_multiple_of(10) {
            tens.to_string()
        } else {
            format!("{tens}-{}", ONES[n % 10])
        };
    }
    let hundreds = format!("{}-hundred", ONES[n / 100]);
    if n.is_multiple_of(100) {
        hundreds
    } else {
        format!("{hundreds}-{}", ordinal_word(n % 100))
    }
}

fn placeholder_name(position: usize) -> String {
    format!("[num-{}]", ordinal_word(position))
}

pub fn mask_text(text: &str) -> MaskedSentence {
    let numerals = scan_numerals(text);
    let mut masked = String::with_capacity(text.len());
    let mut placeholders = Vec::with_capacity(numerals.len());
    let mut cursor = 0;
    for (i, n) in numerals.iter().enumerate() {
        let name = placeholder_name(i + 1);
        masked.push_str(&text[cursor..n.start]);
        masked.push_str(&name);
        cursor = n.end;
        placeholders.push((name, n.raw.clone()));
    }
    masked.push_str(&text[cursor..]);
    MaskedSentence {
        masked_text: masked,
        placeholders,
    }
}

pub fn mask_numerals(sentence: &Sentence) -> MaskedSentence {
    mask_text(&sentence.text)
}

static PLACEHOLDER_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[num-[a-z-]+\]").expect("placeholder pattern compiles"));

/// Replace every placeholder occurrence in `decoded` with its raw numeral.
/// Placeholders of `mask` that never occur in `decoded` are reported in
/// [`Unmasked::dropped`]; a placeholder name unknown to `mask` is an error.
pub fn unmask(mask: &MaskedSentence, decoded: &str) -> Result<Unmasked, TextError> {
    let mut text = String::with_capacity(decoded.len());
    let mut seen = vec![false; mask.placeholders.len()];
    let mut cursor = 0;
    for m in PLACEHOLDER_RE.find_iter(decoded) {
        let position = mask
            .placeholders
            .iter()
            .position(|(name, _)| name == m.as_str())
            .ok_or_else(|| TextError::UnknownPlaceholder {
                name: m.as_str().to_string(),
            })?;
        seen[position] = true;
        text.push_str(&decoded[cursor..m.start()]);
        text.push_str(&mask.placeholders[position].1);
        cursor = m.end();
    }
    text.push_str(&decoded[cursor..]);
    let dropped = mask
        .placeholders
        .iter()
        .zip(&seen)
        .filter(|(_, seen)| !**seen)
        .map(|((name, _), _)| name.clone())
        .collect();
    Ok(Unmasked { text, dropped })
}
