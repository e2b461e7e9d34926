//! Fuzzed and property-based checks of the text primitives against
//! independent oracles.

use callsum_core::rng::SplitMix64;
use callsum_core::text::{
    canonical_key, mask_text, scan_numerals, split_sentences, tokenize, unmask, ABBREVIATIONS,
};
use proptest::prelude::*;

/// Brute-force splitter oracle: enumerate every terminal-mark position and
/// filter with the shared lexicon and the followed-by-whitespace rule, with
/// no reuse of the production scanning code.
fn oracle_split(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut cuts = Vec::new();
    for (k, &(i, c)) in chars.iter().enumerate() {
        if c != '.' && c != '?' && c != '!' {
            continue;
        }
        let followed_by_break = match chars.get(k + 1) {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if !followed_by_break {
            continue;
        }
        if c == '.' {
            let mut start = k;
            while start > 0 {
                let prev = chars[start - 1].1;
                if prev.is_alphanumeric() || prev == '.' || prev == '-' || prev == '&' {
                    start -= 1;
                } else {
                    break;
                }
            }
            let word = text[chars[start].0..i + 1].to_lowercase();
            if ABBREVIATIONS.contains(&word.as_str()) {
                continue;
            }
        }
        cuts.push(i + c.len_utf8());
    }
    cuts.push(text.len());
    let mut out = Vec::new();
    let mut begin = 0;
    for cut in cuts {
        if cut <= begin {
            continue;
        }
        let segment = text[begin..cut].trim();
        begin = cut;
        if !segment.is_empty() {
            out.push(segment.to_string());
        }
    }
    out
}

const WORDS: &[&str] = &[
    "revenue", "margin", "growth", "quarter", "earnings", "cash", "flow", "guidance", "segment",
    "outlook", "demand", "cost", "share", "sales", "profit", "capital", "record", "strong",
];
const ABBREV_WORDS: &[&str] = &["Inc.", "Corp.", "Ltd.", "Mr.", "U.S.", "vs."];
const NUMERALS: &[&str] = &[
    "$1.52",
    "$2.74 billion",
    "27 percent",
    "$667 million",
    "40.5%",
    "1,234,567",
    "2021",
    "€15 million",
    "$97.28 BILLION",
    "0.5 thousand",
];

fn fuzz_sentence(rng: &mut SplitMix64, force_numeral: bool) -> String {
    let mut words = Vec::new();
    let len = rng.next_below(8) + 2;
    let mut has_numeral = false;
    for _ in 0..len {
        match rng.next_below(10) {
            0 | 1 if !words.is_empty() => {
                words.push(NUMERALS[rng.next_below(NUMERALS.len())].to_string());
                has_numeral = true;
            }
            2 => words.push(ABBREV_WORDS[rng.next_below(ABBREV_WORDS.len())].to_string()),
            _ => words.push(WORDS[rng.next_below(WORDS.len())].to_string()),
        }
    }
    if force_numeral && !has_numeral {
        words.push(NUMERALS[rng.next_below(NUMERALS.len())].to_string());
    }
    let terminator = match rng.next_below(6) {
        0 => "?",
        1 => "!",
        _ => ".",
    };
    format!("{}{}", words.join(" "), terminator)
}

fn fuzz_document(rng: &mut SplitMix64) -> String {
    let n = rng.next_below(8) + 1;
    (0..n)
        .map(|_| fuzz_sentence(rng, false))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn splitter_agrees_with_brute_force_oracle_on_fuzzed_documents() {
    let mut rng = SplitMix64::new(2024);
    for _ in 0..50 {
        let doc = fuzz_document(&mut rng);
        let got: Vec<String> = split_sentences(&doc).into_iter().map(|s| s.text).collect();
        let expected = oracle_split(&doc);
        assert_eq!(got, expected, "split mismatch on: {doc}");
    }
}

#[test]
fn splitter_reconstructs_text_modulo_whitespace() {
    let mut rng = SplitMix64::new(7);
    for _ in 0..50 {
        let doc = fuzz_document(&mut rng);
        let joined = split_sentences(&doc)
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let normalize = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        assert_eq!(normalize(&joined), normalize(&doc));
    }
}

#[test]
fn splitter_is_idempotent_on_its_own_output() {
    let mut rng = SplitMix64::new(11);
    for _ in 0..50 {
        let doc = fuzz_document(&mut rng);
        let first: Vec<String> = split_sentences(&doc).into_iter().map(|s| s.text).collect();
        let rejoined = first.join(" ");
        let second: Vec<String> = split_sentences(&rejoined)
            .into_iter()
            .map(|s| s.text)
            .collect();
        assert_eq!(first, second);
    }
}

#[test]
fn mask_round_trip_on_fuzzed_numeral_sentences() {
    let mut rng = SplitMix64::new(99);
    for _ in 0..1000 {
        let sentence = fuzz_sentence(&mut rng, true);
        let mask = mask_text(&sentence);
        assert!(!mask.placeholders.is_empty(), "no numeral in: {sentence}");
        let restored = unmask(&mask, &mask.masked_text).unwrap();
        assert_eq!(restored.text, sentence);
        assert!(restored.dropped.is_empty());
        // masked text must not leak any numeral
        assert!(scan_numerals(&mask.masked_text).is_empty());
    }
}

proptest! {
    #[test]
    fn canonical_key_ignores_separators_and_trailing_zeros(
        int_part in 1u64..100_000,
        frac_zeros in 0usize..3,
    ) {
        let with_sep = {
            // insert thousands separators manually
            let digits = int_part.to_string();
            let mut grouped = String::new();
            for (i, c) in digits.chars().enumerate() {
                if i > 0 && (digits.len() - i) % 3 == 0 {
                    grouped.push(',');
                }
                grouped.push(c);
            }
            grouped
        }.to_string();
        let plain = int_part.to_string();
        let zeros = "0".repeat(frac_zeros);
        let padded = if frac_zeros > 0 { format!("{plain}.{zeros}") } else { plain.clone() };

        let key = |s: &str| {
            let ns = scan_numerals(s);
            prop_assert!(ns.len() == 1, "expected one numeral in {s}");
            Ok(canonical_key(&ns[0]))
        };
        prop_assert_eq!(key(&with_sep)?, key(&plain)?);
        prop_assert_eq!(key(&padded)?, key(&plain)?);
    }

    #[test]
    fn magnitude_words_shift_exactly(value in 1u64..10_000, frac in 0u64..100) {
        let spelled = format!("{value}.{frac:02} billion");
        let shifted = format!("{value}{frac:02}0000000");
        let key = |s: &str| {
            let ns = scan_numerals(s);
            prop_assert!(ns.len() == 1);
            Ok(canonical_key(&ns[0]))
        };
        prop_assert_eq!(key(&spelled)?, key(&shifted)?);
    }

    #[test]
    fn numeral_spans_reparse_and_never_overlap(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let sentence = fuzz_sentence(&mut rng, true);
        let numerals = scan_numerals(&sentence);
        let mut prev_end = 0;
        for n in &numerals {
            prop_assert!(n.start >= prev_end);
            prop_assert!(n.end <= sentence.len());
            prop_assert_eq!(&sentence[n.start..n.end], n.raw.as_str());
            prev_end = n.end;
            let reparsed = scan_numerals(&n.raw);
            prop_assert_eq!(reparsed.len(), 1);
            prop_assert_eq!(canonical_key(&reparsed[0]), canonical_key(n));
            prop_assert_eq!(&reparsed[0].raw, &n.raw);
            prop_assert_eq!(reparsed[0].value, n.value);
            prop_assert_eq!(reparsed[0].magnitude, n.magnitude);
            prop_assert_eq!(reparsed[0].unit, n.unit);
        }
    }

    #[test]
    fn no_sentence_ever_has_empty_tokens(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let doc = fuzz_document(&mut rng);
        for sentence in split_sentences(&doc) {
            prop_assert!(!sentence.tokens.is_empty());
            prop_assert_eq!(sentence.tokens.clone(), tokenize(&sentence.text));
        }
    }
}
