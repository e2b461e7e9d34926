//! Evaluation: clipped n-gram overlap (ROUGE-1/2), longest-common-
//! subsequence overlap (ROUGE-L, summary level), numeral precision against
//! the source document, and report assembly over a prediction set.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocumentSummaryPair;
use crate::text::{canonical_key, scan_numerals, tokenize, Numeral};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("score undefined against an empty reference")]
    EmptyReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_counts(matched: usize, cand_total: usize, ref_total: usize) -> Self {
        let precision = if cand_total == 0 {
            0.0
        } else {
            matched as f64 / cand_total as f64
        };
        let recall = if ref_total == 0 {
            0.0
        } else {
            matched as f64 / ref_total as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap. Undefined when the reference is too short to
/// form a single n-gram.
pub fn rouge_n(
    candidate: &[String],
    reference: &[String],
    n: usize,
) -> Result<RougeScore, MetricsError> {
    debug_assert!(n >= 1);
    if reference.len() < n {
        return Err(MetricsError::EmptyReference);
    }
    let cand = ngram_counts(candidate, n);
    let refr = ngram_counts(reference, n);
    let matched: usize = cand
        .iter()
        .map(|(gram, count)| (*count).min(refr.get(gram).copied().unwrap_or(0)))
        .sum();
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len() - (n - 1);
    Ok(RougeScore::from_counts(matched, cand_total, ref_total))
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut current = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            current[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(current[j])
            };
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

/// Longest-common-subsequence overlap at the summary level.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> Result<RougeScore, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let lcs = lcs_length(candidate, reference);
    Ok(RougeScore::from_counts(lcs, candidate.len(), reference.len()))
}

/// Outcome of numeral-precision scoring for one summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NumPrecOutcome {
    Score { consistent: usize, total: usize },
    NoNumerals,
}

impl NumPrecOutcome {
    pub fn fraction(&self) -> Option<f64> {
        match self {
            NumPrecOutcome::Score { consistent, total } => {
                Some(*consistent as f64 / *total as f64)
            }
            NumPrecOutcome::NoNumerals => None,
        }
    }
}

/// The canonical numeral keys stated anywhere in a source document.
pub fn source_key_set(doc_sentences: &[crate::text::Sentence]) -> HashSet<String> {
    doc_sentences
        .iter()
        .flat_map(|s| scan_numerals(&s.text))
        .map(|n| canonical_key(&n))
        .collect()
}

/// Per-numeral consistency of a summary against a source key set: a
/// numeral is consistent when its canonical key is stated somewhere in the
/// source.
pub fn num_prec_detailed(summary: &str, source_keys: &HashSet<String>) -> Vec<(Numeral, bool)> {
    scan_numerals(summary)
        .into_iter()
        .map(|n| {
            let consistent = source_keys.contains(&canonical_key(&n));
            (n, consistent)
        })
        .collect()
}

/// Fraction of summary numerals consistent with the source document.
pub fn num_prec(summary: &str, source_keys: &HashSet<String>) -> NumPrecOutcome {
    let detailed = num_prec_detailed(summary, source_keys);
    if detailed.is_empty() {
        return NumPrecOutcome::NoNumerals;
    }
    NumPrecOutcome::Score {
        consistent: detailed.iter().filter(|(_, ok)| *ok).count(),
        total: detailed.len(),
    }
}

/// Scores for one evaluated document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScores {
    pub pair_id: String,
    pub rouge1: RougeScore,
    pub rouge2: Option<RougeScore>,
    pub rouge_l: RougeScore,
    pub num_prec: NumPrecOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Scoring configuration, recorded so numbers are comparable: shared
    /// whitespace tokenizer, no stemming, no stopword removal,
    /// summary-level ROUGE-L, canonical-key numeral matching.
    pub config: String,
    pub evaluated: usize,
    pub missing_predictions: Vec<String>,
    pub empty_references: Vec<String>,
    pub summaries_without_numerals: usize,
    pub mean_rouge1_f1: f64,
    pub mean_rouge2_f1: f64,
    pub mean_rouge_l_f1: f64,
    pub mean_num_prec: f64,
    pub per_document: Vec<DocumentScores>,
}

pub const METRICS_CONFIG: &str =
    "tokenizer=whitespace-lower-nostem; rouge_l=summary-level; num_prec=canonical-key";

/// Score a prediction set against its reference pairs. Predictions map
/// pair id to summary text; every prediction id must belong to a pair.
/// Pairs without a prediction are listed and excluded from the means, as
/// are documents whose reference is empty.
pub fn evaluate(
    predictions: &BTreeMap<String, String>,
    pairs: &[DocumentSummaryPair],
) -> MetricsReport {
    let mut missing = Vec::new();
    let mut empty_references = Vec::new();
    let mut jobs = Vec::new();
    for pair in pairs {
        match predictions.get(&pair.pair_id) {
            None => missing.push(pair.pair_id.clone()),
            Some(text) => jobs.push((pair, text)),
        }
    }

    let scored: Vec<Result<DocumentScores, String>> = jobs
        .par_iter()
        .map(|(pair, prediction)| {
            let reference_tokens: Vec<String> = pair
                .summary
                .bullets
                .iter()
                .flat_map(|b| b.tokens.iter().cloned())
                .collect();
            if reference_tokens.is_empty() {
                return Err(pair.pair_id.clone());
            }
            let candidate_tokens = tokenize(prediction);
            let source_keys = source_key_set(&pair.transcript.sentences);
            Ok(DocumentScores {
                pair_id: pair.pair_id.clone(),
                rouge1: rouge_n(&candidate_tokens, &reference_tokens, 1)
                    .expect("nonempty reference"),
                rouge2: rouge_n(&candidate_tokens, &reference_tokens, 2).ok(),
                rouge_l: rouge_l(&candidate_tokens, &reference_tokens)
                    .expect("nonempty reference"),
                num_prec: num_prec(prediction, &source_keys),
            })
        })
        .collect();

    let mut per_document = Vec::new();
    for result in scored {
        match result {
            Ok(scores) => per_document.push(scores),
            Err(pair_id) => empty_references.push(pair_id),
        }
    }

    let mean = |values: Vec<f64>| {
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };
    let num_prec_values: Vec<f64> = per_document
        .iter()
        .filter_map(|d| d.num_prec.fraction())
        .collect();
    MetricsReport {
        config: METRICS_CONFIG.to_string(),
        evaluated: per_document.len(),
        missing_predictions: missing,
        empty_references,
        summaries_without_numerals: per_document
            .iter()
            .filter(|d| d.num_prec == NumPrecOutcome::NoNumerals)
            .count(),
        mean_rouge1_f1: mean(per_document.iter().map(|d| d.rouge1.f1).collect()),
        mean_rouge2_f1: mean(
            per_document
                .iter()
                .filter_map(|d| d.rouge2.map(|r| r.f1))
                .collect(),
        ),
        mean_rouge_l_f1: mean(per_document.iter().map(|d| d.rouge_l.f1).collect()),
        mean_num_prec: mean(num_prec_values),
        per_document,
    }
}

impl MetricsReport {
    /// Aligned plain-text rendering of the corpus means and counts.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<24} {:>10}\n", "metric", "value"));
        let rows = [
            ("rouge-1 f1", self.mean_rouge1_f1),
            ("rouge-2 f1", self.mean_rouge2_f1),
            ("rouge-l f1", self.mean_rouge_l_f1),
            ("num-prec", self.mean_num_prec),
        ];
        for (name, value) in rows {
            out.push_str(&format!("{name:<24} {value:>10.4}\n"));
        }
        out.push_str(&format!("{:<24} {:>10}\n", "documents", self.evaluated));
        out.push_str(&format!(
            "{:<24} {:>10}\n",
            "missing predictions",
            self.missing_predictions.len()
        ));
        out.push_str(&format!(
            "{:<24} {:>10}\n",
            "empty references",
            self.empty_references.len()
        ));
        out.push_str(&format!(
            "{:<24} {:>10}\n",
            "no-numeral summaries", self.summaries_without_numerals
        ));
        out
    }
}
