//! Placeholder-protected paraphrasing into telegram-style bullets.
//!
//! A sentence is masked, handed to a rewrite backend that only ever sees
//! placeholders where its numbers were, and unmasked afterwards; the bullet
//! is then validated so that no numeral appears that the source sentence
//! did not state. The deterministic rule backend ships in-repo; trained
//! rewriters attach as subprocesses speaking masked lines over stdio.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::labels::ParaphrasePair;
use crate::text::{canonical_key, mask_numerals, scan_numerals, unmask, Sentence, TextError};

#[derive(Debug, Error)]
pub enum ParaphraseError {
    #[error("backend `{backend}` violated the placeholder contract: {reason}")]
    BackendViolation { backend: String, reason: String },
    #[error("backend `{backend}` protocol error: {reason}")]
    Protocol { backend: String, reason: String },
    #[error("bad rule table: {0}")]
    BadRuleTable(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A rewriter over masked text. Implementations must treat placeholder
/// tokens as opaque: every placeholder in the output must appear verbatim
/// in the input, and none may be invented.
pub trait RewriteBackend: Sync {
    fn name(&self) -> &str;

    fn rewrite(&self, masked: &str) -> Result<String, ParaphraseError>;

    fn rewrite_batch(&self, lines: &[String]) -> Result<Vec<String>, ParaphraseError> {
        lines.iter().map(|l| self.rewrite(l)).collect()
    }
}

/// Passes masked text through untouched.
pub struct IdentityBackend;

impl RewriteBackend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn rewrite(&self, masked: &str) -> Result<String, ParaphraseError> {
        Ok(masked.to_string())
    }
}

/// A telegram-style bullet tied back to the sentence it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bullet {
    pub text: String,
    pub source_sentence_index: usize,
}

/// Outcome of paraphrasing one sentence. `ValueLoss` carries the partial
/// bullet produced after the backend dropped one or more placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParaphraseOutcome {
    Clean(Bullet),
    ValueLoss {
        bullet: Bullet,
        dropped_values: Vec<String>,
    },
}

impl ParaphraseOutcome {
    pub fn bullet(&self) -> &Bullet {
        match self {
            ParaphraseOutcome::Clean(b) => b,
            ParaphraseOutcome::ValueLoss { bullet, .. } => bullet,
        }
    }
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn finalize_bullet_text(text: &str) -> String {
    let mut out = collapse_whitespace(&text.to_lowercase());
    loop {
        if out.ends_with([' ', ',', ';', ':']) {
            out.pop();
        } else if out.ends_with(" .") || out.ends_with(" !") || out.ends_with(" ?") {
            // a pass consumed the word before the terminal mark; reattach it
            let mark = out.pop().expect("nonempty");
            out.pop();
            out.push(mark);
        } else {
            break;
        }
    }
    if !out.is_empty() && !out.ends_with(['.', '!', '?']) {
        out.push('.');
    }
    out
}

fn key_set(text: &str) -> HashSet<String> {
    scan_numerals(text).iter().map(canonical_key).collect()
}

/// Mask, rewrite, unmask, validate. The bullet keeps only values the
/// source sentence stated; a backend that drops values yields `ValueLoss`,
/// and one that invents placeholders or numerals is a contract violation.
pub fn paraphrase(
    sentence: &Sentence,
    backend: &dyn RewriteBackend,
) -> Result<ParaphraseOutcome, ParaphraseError> {
    let mask = mask_numerals(sentence);
    let rewritten = backend.rewrite(&mask.masked_text)?;
    let unmasked = unmask(&mask, &rewritten).map_err(|e| match e {
        TextError::UnknownPlaceholder { name } => ParaphraseError::BackendViolation {
            backend: backend.name().to_string(),
            reason: format!("output used unknown placeholder `{name}`"),
        },
    })?;
    let text = finalize_bullet_text(&unmasked.text);
    if !key_set(&text).is_subset(&key_set(&sentence.text)) {
        return Err(ParaphraseError::BackendViolation {
            backend: backend.name().to_string(),
            reason: "output states a numeral the source does not".to_string(),
        });
    }
    let bullet = Bullet {
        text,
        source_sentence_index: sentence.index,
    };
    if unmasked.dropped.is_empty() {
        Ok(ParaphraseOutcome::Clean(bullet))
    } else {
        let dropped_values = unmasked
            .dropped
            .iter()
            .filter_map(|name| {
                mask.placeholders
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, raw)| raw.clone())
            })
            .collect();
        Ok(ParaphraseOutcome::ValueLoss {
            bullet,
            dropped_values,
        })
    }
}

static QUARTER_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?:\b(?:in|during|for)\s+)?(?:\bthe\s+)?\b(first|second|third|fourth)[\s-]+quarter\b(?:\s+of\s+(?:19|20)\d{2})?\s*,?",
    )
    .expect("quarter pattern compiles")
});

fn quarter_token(word: &str) -> &'static str {
    match word {
        "first" => "q1",
        "second" => "q2",
        "third" => "q3",
        _ => "q4",
    }
}

/// The deterministic rule rewriter. Passes, in order: lowercase; quarter
/// phrases to `q1`..`q4`; leading discourse openers dropped; the phrase
/// substitution table; whitespace collapse and terminal period. The opener
/// and substitution lists are data, loaded from the versioned rule table.
#[derive(Clone)]
pub struct RuleBackend {
    openers: Vec<String>,
    substitutions: Vec<(Regex, String)>,
}

static BUILTIN_RULES: &str = include_str!("../data/rewrite_rules.tsv");

static BUILTIN_BACKEND: LazyLock<RuleBackend> =
    LazyLock::new(|| RuleBackend::from_rules(BUILTIN_RULES).expect("builtin rule table parses"));

impl RuleBackend {
    /// The rule table shipped with the repo.
    pub fn builtin() -> &'static RuleBackend {
        &BUILTIN_BACKEND
    }

    /// Parse a rule table: an `[openers]` section with one leading phrase
    /// per line and a `[substitutions]` section with tab-separated
    /// `phrase<TAB>replacement` lines (empty replacement deletes).
    pub fn from_rules(table: &str) -> Result<Self, ParaphraseError> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Openers,
            Substitutions,
        }
        let mut section = Section::None;
        let mut openers = Vec::new();
        let mut substitutions = Vec::new();
        for (lineno, raw_line) in table.lines().enumerate() {
            let line = raw_line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.trim() {
                "[openers]" => section = Section::Openers,
                "[substitutions]" => section = Section::Substitutions,
                _ => match section {
                    Section::None => {
                        return Err(ParaphraseError::BadRuleTable(format!(
                            "line {}: content before any section header",
                            lineno + 1
                        )))
                    }
                    Section::Openers => openers.push(line.trim().to_string()),
                    Section::Substitutions => {
                        let (phrase, replacement) =
                            line.split_once('\t').ok_or_else(|| {
                                ParaphraseError::BadRuleTable(format!(
                                    "line {}: expected phrase<TAB>replacement",
                                    lineno + 1
                                ))
                            })?;
                        let pattern = format!(r"\b{}\b", regex::escape(phrase.trim()));
                        let re = Regex::new(&pattern)
                            .map_err(|e| ParaphraseError::BadRuleTable(e.to_string()))?;
                        substitutions.push((re, replacement.trim().to_string()));
                    }
                },
            }
        }
        // longer openers strip first so "in the" wins over "in"
        openers.sort_by_key(|o| std::cmp::Reverse(o.len()));
        Ok(Self {
            openers,
            substitutions,
        })
    }

    fn strip_openers<'a>(&self, mut text: &'a str) -> &'a str {
        loop {
            let trimmed = text.trim_start();
            let mut stripped = None;
            for opener in &self.openers {
                if let Some(rest) = trimmed.strip_prefix(opener.as_str()) {
                    // phrase boundary: next char must not continue a word
                    if rest.starts_with([' ', ',']) {
                        stripped = Some(rest.trim_start_matches([',', ' ']));
                        break;
                    }
                }
            }
            match stripped {
                Some(rest) => text = rest,
                None => return trimmed,
            }
        }
    }

    fn apply(&self, masked: &str) -> String {
        // placeholders are already lowercase, so lowercasing the whole
        // line leaves them byte-identical
        let mut text = masked.to_lowercase();
        text = QUARTER_RE
            .replace_all(&text, |caps: &regex::Captures| {
                format!("{} ", quarter_token(&caps[1]))
            })
            .into_owned();
        text = self.strip_openers(&text).to_string();
        for (re, replacement) in &self.substitutions {
            text = re
                .replace_all(&text, regex::NoExpand(replacement.as_str()))
                .into_owned();
        }
        finalize_bullet_text(&text)
    }
}

impl RewriteBackend for RuleBackend {
    fn name(&self) -> &str {
        "rules"
    }

    fn rewrite(&self, masked: &str) -> Result<String, ParaphraseError> {
        Ok(self.apply(masked))
    }
}

/// Rewrite with the built-in rule table.
pub fn rule_rewrite(masked: &str) -> String {
    RuleBackend::builtin().apply(masked)
}

/// An external rewriter run as a subprocess: masked lines go to its stdin,
/// rewritten masked lines come back on stdout, one-to-one and in order.
pub struct SubprocessBackend {
    pub program: String,
    pub args: Vec<String>,
}

impl SubprocessBackend {
    pub fn new(command_line: &str) -> Result<Self, ParaphraseError> {
        let mut parts = command_line.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or_else(|| ParaphraseError::Protocol {
            backend: "subprocess".to_string(),
            reason: "empty command line".to_string(),
        })?;
        Ok(Self {
            program,
            args: parts.collect(),
        })
    }
}

impl RewriteBackend for SubprocessBackend {
    fn name(&self) -> &str {
        "subprocess"
    }

    fn rewrite(&self, masked: &str) -> Result<String, ParaphraseError> {
        let lines = self.rewrite_batch(std::slice::from_ref(&masked.to_string()))?;
        Ok(lines.into_iter().next().unwrap_or_default())
    }

    fn rewrite_batch(&self, lines: &[String]) -> Result<Vec<String>, ParaphraseError> {
        let protocol = |reason: String| ParaphraseError::Protocol {
            backend: format!("subprocess:{}", self.program),
            reason,
        };
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| protocol(format!("failed to spawn: {e}")))?;
        {
            let stdin = child.stdin.as_mut().expect("stdin piped");
            for line in lines {
                if line.contains('\n') {
                    return Err(protocol("input line contains a newline".to_string()));
                }
                writeln!(stdin, "{line}").map_err(|e| protocol(e.to_string()))?;
            }
        }
        let output = child
            .wait_with_output()
            .map_err(|e| protocol(e.to_string()))?;
        if !output.status.success() {
            return Err(protocol(format!("exited with {}", output.status)));
        }
        let text =
            String::from_utf8(output.stdout).map_err(|_| protocol("non-UTF-8 output".into()))?;
        let rewritten: Vec<String> = text.lines().map(str::to_string).collect();
        if rewritten.len() != lines.len() {
            return Err(protocol(format!(
                "sent {} lines, received {}",
                lines.len(),
                rewritten.len()
            )));
        }
        Ok(rewritten)
    }
}

/// Write the rewrite training set: one record per pair, ordered by pair id
/// so re-exports are byte-identical.
pub fn export_backend_training_set(
    pairs: &[ParaphrasePair],
    path: &Path,
) -> Result<usize, ParaphraseError> {
    #[derive(Serialize)]
    struct Record<'a> {
        pair_id: &'a str,
        masked_source: &'a str,
        masked_target: &'a str,
    }
    let mut ordered: Vec<&ParaphrasePair> = pairs.iter().collect();
    ordered.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    let mut out = String::new();
    for pair in ordered {
        let record = Record {
            pair_id: &pair.pair_id,
            masked_source: &pair.source.masked_text,
            masked_target: &pair.target.masked_text,
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, &out).map_err(|source| ParaphraseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(pairs.len())
}
