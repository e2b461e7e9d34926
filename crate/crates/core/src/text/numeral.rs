//! The financial numeral grammar: currency symbols, thousands separators,
//! decimals, percent marks, and magnitude words, parsed into exact values
//! with a canonical comparison key.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumeralUnit {
    Currency,
    Percent,
    Plain,
}

/// A parsed financial value. `raw` is the exact source substring (currency
/// symbol and magnitude word included), `span` its byte range within the
/// sentence. `magnitude` is the exponent contributed by a magnitude word:
/// 0 none, 3 thousand, 6 million, 9 billion, 12 trillion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numeral {
    pub raw: String,
    pub value: f64,
    pub magnitude: u32,
    pub unit: NumeralUnit,
    pub start: usize,
    pub end: usize,
}

static NUMERAL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"[$€£]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:%|[ \t]+(?i:thousand|million|billion|trillion|percent)\b)?",
    )
    .expect("numeral grammar compiles")
});

fn magnitude_exponent(word: &str) -> u32 {
    match word.to_lowercase().as_str() {
        "thousand" => 3,
        "million" => 6,
        "billion" => 9,
        "trillion" => 12,
        _ => 0,
    }
}

/// Scan any text for numeral-grammar matches, ordered by span start and
/// non-overlapping. Matches glued to a preceding letter or digit (ticker
/// codes like `Q2`, `10-K` suffixes) are rejected.
pub fn scan_numerals(text: &str) -> Vec<Numeral> {
    let mut out = Vec::new();
    for m in NUMERAL_RE.find_iter(text) {
        if let Some(prev) = text[..m.start()].chars().next_back() {
            if prev.is_alphanumeric() {
                continue;
            }
        }
        let raw = m.as_str();
        let mut rest = raw;
        let mut unit = NumeralUnit::Plain;
        for sym in ['$', '€', '£'] {
            if let Some(stripped) = rest.strip_prefix(sym) {
                rest = stripped;
                unit = NumeralUnit::Currency;
                break;
            }
        }
        let mut magnitude = 0;
        if let Some(stripped) = rest.strip_suffix('%') {
            rest = stripped;
            unit = NumeralUnit::Percent;
        } else if let Some(space) = rest.find([' ', '\t']) {
            let word = rest[space..].trim();
            if word.eq_ignore_ascii_case("percent") {
                unit = NumeralUnit::Percent;
            } else {
                magnitude = magnitude_exponent(word);
            }
            rest = &rest[..space];
        }
        let digits: String = rest.chars().filter(|c| *c != ',').collect();
        let value: f64 = digits.parse().expect("grammar match parses as f64");
        if !value.is_finite() {
            continue;
        }
        out.push(Numeral {
            raw: raw.to_string(),
            value,
            magnitude,
            unit,
            start: m.start(),
            end: m.end(),
        });
    }
    out
}

pub fn extract_numerals(sentence: &Sentence) -> Vec<Numeral> {
    scan_numerals(&sentence.text)
}

/// Canonical decimal string of `value x 10^magnitude`, computed by exact
/// digit shifting so `$2.74 billion` and `2,740,000,000` share the key
/// `2740000000`. Separators and trailing zeros never matter; the unit is
/// not part of the key.
pub fn canonical_key(n: &Numeral) -> String {
    let mut rest = n.raw.as_str();
    for sym in ['$', '€', '£'] {
        if let Some(stripped) = rest.strip_prefix(sym) {
            rest = stripped;
            break;
        }
    }
    rest = rest.strip_suffix('%').unwrap_or(rest);
    if let Some(space) = rest.find([' ', '\t']) {
        rest = &rest[..space];
    }
    let digits: String = rest.chars().filter(|c| *c != ',').collect();
    decimal_shift(&digits, n.magnitude)
}

/// Shift the decimal point of a digit string right by `exponent` places,
/// then normalize: no leading zeros (except a lone integer zero), no
/// trailing fractional zeros, no dangling point.
fn decimal_shift(digits: &str, exponent: u32) -> String {
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let exponent = exponent as usize;
    let mut int_digits = String::from(int_part);
    let mut frac_digits = String::from(frac_part);
    if frac_digits.len() <= exponent {
        let pad = exponent - frac_digits.len();
        int_digits.push_str(&frac_digits);
        int_digits.extend(std::iter::repeat_n('0', pad));
        frac_digits.clear();
    } else {
        int_digits.push_str(&frac_digits[..exponent]);
        frac_digits = frac_digits[exponent..].to_string();
    }
    let int_trimmed = int_digits.trim_start_matches('0');
    let int_norm = if int_trimmed.is_empty() {
        "0"
    } else {
        int_trimmed
    };
    let frac_norm = frac_digits.trim_end_matches('0');
    if frac_norm.is_empty() {
        int_norm.to_string()
    } else {
        format!("{int_norm}.{frac_norm}")
    }
}
