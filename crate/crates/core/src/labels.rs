//! Oracle extractive labels. Each reference bullet is traced back to the
//! document sentences that state its numbers; bullets without numbers fall
//! back to the most lexically similar sentence. The traced sentences become
//! the binary training targets for the extractive model and, masked, the
//! source/target pairs for training a rewriter.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocumentSummaryPair;
use crate::encoder::{SentenceEncoder, SentenceVec};
use crate::text::{canonical_key, extract_numerals, mask_numerals, MaskedSentence, Sentence};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("similarity fallback failed: every document sentence encodes to zero")]
    FallbackFailed,
    #[error("document has no sentences")]
    EmptyDocument,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Numeric,
    Similarity,
}

/// One target bullet traced to its document sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub target_index: usize,
    pub matched: Vec<usize>,
    pub kind: MatchKind,
}

/// Per-sentence binary labels plus the alignments that justify them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub labels: Vec<u8>,
    pub alignments: Vec<Alignment>,
}

impl LabelSet {
    pub fn positive_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, y)| **y == 1)
            .map(|(i, _)| i)
            .collect()
    }
}

fn key_counts(sentence: &Sentence) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for numeral in extract_numerals(sentence) {
        *counts.entry(canonical_key(&numeral)).or_insert(0) += 1;
    }
    counts
}

fn contains_all(haystack: &HashMap<String, usize>, needles: &HashMap<String, usize>) -> bool {
    needles
        .iter()
        .all(|(key, n)| haystack.get(key).copied().unwrap_or(0) >= *n)
}

/// All document sentences whose canonical numeral keys (as a multiset)
/// contain every key of the target. Empty when the target has no numerals,
/// routing the bullet to the similarity fallback.
pub fn numeric_match(target: &Sentence, doc: &[Sentence]) -> Vec<usize> {
    let target_keys = key_counts(target);
    if target_keys.is_empty() {
        return Vec::new();
    }
    doc.iter()
        .enumerate()
        .filter(|(_, s)| contains_all(&key_counts(s), &target_keys))
        .map(|(i, _)| i)
        .collect()
}

/// Index of the document vector most cosine-similar to the target. Zero
/// vectors score -1 and ties resolve to the smallest index; if every
/// document vector is zero there is nothing to rank.
pub fn similarity_fallback(
    target: &SentenceVec,
    doc: &[SentenceVec],
) -> Result<usize, LabelError> {
    if doc.is_empty() {
        return Err(LabelError::EmptyDocument);
    }
    if doc.iter().all(SentenceVec::is_zero) {
        return Err(LabelError::FallbackFailed);
    }
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (i, vec) in doc.iter().enumerate() {
        let score = target.cosine(vec).unwrap_or(-1.0);
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    Ok(best)
}

/// Build the oracle label set for one pair: numeric matching per bullet
/// with similarity fallback, labels set on the union of matched sentences.
pub fn build_labels(
    pair: &DocumentSummaryPair,
    encoder: &dyn SentenceEncoder,
) -> Result<LabelSet, LabelError> {
    let doc = &pair.transcript.sentences;
    if doc.is_empty() {
        return Err(LabelError::EmptyDocument);
    }
    let mut doc_vecs: Option<Vec<SentenceVec>> = None;
    let mut labels = vec![0u8; doc.len()];
    let mut alignments = Vec::with_capacity(pair.summary.bullets.len());
    for target in &pair.summary.bullets {
        let numeric = numeric_match(target, doc);
        let alignment = if numeric.is_empty() {
            let vecs =
                doc_vecs.get_or_insert_with(|| doc.iter().map(|s| encoder.encode(s)).collect());
            let chosen = similarity_fallback(&encoder.encode(target), vecs)?;
            Alignment {
                target_index: target.index,
                matched: vec![chosen],
                kind: MatchKind::Similarity,
            }
        } else {
            Alignment {
                target_index: target.index,
                matched: numeric,
                kind: MatchKind::Numeric,
            }
        };
        for &i in &alignment.matched {
            labels[i] = 1;
        }
        alignments.push(alignment);
    }
    Ok(LabelSet { labels, alignments })
}

/// Label many pairs in parallel; output order follows input order.
pub fn build_labels_batch(
    pairs: &[DocumentSummaryPair],
    encoder: &dyn SentenceEncoder,
) -> Vec<Result<LabelSet, LabelError>> {
    pairs
        .par_iter()
        .map(|pair| build_labels(pair, encoder))
        .collect()
}

/// A masked (document sentence, reference bullet) rewrite training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphrasePair {
    pub pair_id: String,
    pub source: MaskedSentence,
    pub target: MaskedSentence,
}

fn masked_key_counts(mask: &MaskedSentence) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for (_, raw) in &mask.placeholders {
        for numeral in crate::text::scan_numerals(raw) {
            *counts.entry(canonical_key(&numeral)).or_insert(0) += 1;
        }
    }
    counts
}

/// One rewrite pair per alignment edge, both sides masked. Numeric-kind
/// edges are validated for placeholder-key containment (target within
/// source); violations, which only arise from key-collision edge cases,
/// drop the pair and are counted.
pub fn build_paraphrase_pairs(
    pair: &DocumentSummaryPair,
    labels: &LabelSet,
) -> (Vec<ParaphrasePair>, usize) {
    let mut out = Vec::new();
    let mut dropped = 0usize;
    for alignment in &labels.alignments {
        let target = &pair.summary.bullets[alignment.target_index];
        let masked_target = mask_numerals(target);
        for &doc_index in &alignment.matched {
            let masked_source = mask_numerals(&pair.transcript.sentences[doc_index]);
            if alignment.kind == MatchKind::Numeric
                && !contains_all(
                    &masked_key_counts(&masked_source),
                    &masked_key_counts(&masked_target),
                )
            {
                dropped += 1;
                continue;
            }
            out.push(ParaphrasePair {
                pair_id: format!("{}:{}:{}", pair.pair_id, alignment.target_index, doc_index),
                source: masked_source,
                target: masked_target.clone(),
            });
        }
    }
    (out, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SummaryArticle, Transcript};
    use crate::encoder::fit_lexical;

    fn sentences(texts: &[&str]) -> Vec<Sentence> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Sentence::new(*t, i))
            .collect()
    }

    fn make_pair(doc: &[&str], bullets: &[&str]) -> DocumentSummaryPair {
        DocumentSummaryPair {
            pair_id: "p1".to_string(),
            transcript: Transcript {
                source_id: "t1".to_string(),
                company_code: "ACM".to_string(),
                event_date: "2021-07-29".parse().unwrap(),
                sentences: sentences(doc),
            },
            summary: SummaryArticle {
                source_id: "a1".to_string(),
                company_code: "ACM".to_string(),
                post_date: "2021-07-29".parse().unwrap(),
                bullets: sentences(bullets),
            },
            merged_from: vec!["a1".to_string()],
        }
    }

    #[test]
    fn numeric_match_direct_containment() {
        let doc = sentences(&[
            "We opened three new offices.",
            "Margins were healthy.",
            "Earnings per share came in at $1.52 for the quarter.",
        ]);
        let target = Sentence::new("QUARTERLY EARNINGS PER SHARE $1.52.", 0);
        assert_eq!(numeric_match(&target, &doc), vec![2]);
    }

    #[test]
    fn numeric_match_selects_all_matching_sentences() {
        let doc = sentences(&[
            "Guidance is $2.74 billion to $2.79 billion.",
            "Filler sentence.",
            "We reaffirm revenue of $2.74 billion to $2.79 billion for the year.",
        ]);
        let target = Sentence::new("SEES FY REVENUE $2.74 BILLION TO $2.79 BILLION.", 0);
        assert_eq!(numeric_match(&target, &doc), vec![0, 2]);
    }

    #[test]
    fn target_without_numerals_matches_nothing() {
        let doc = sentences(&["Revenue was $667 million."]);
        let target = Sentence::new("margins improved.", 0);
        assert!(numeric_match(&target, &doc).is_empty());
    }

    #[test]
    fn numeric_match_is_containment_not_equality() {
        let doc = sentences(&[
            "Revenue was $667 million, up 27 percent, with EPS of $2.30.",
        ]);
        let target = Sentence::new("q2 revenue rose 27 percent to $667 million.", 0);
        assert_eq!(numeric_match(&target, &doc), vec![0]);
    }

    #[test]
    fn magnitude_notation_does_not_block_matching() {
        let doc = sentences(&["Spending reached $2,740 million this year."]);
        let target = Sentence::new("SPEND OF $2.74 BILLION.", 0);
        assert_eq!(numeric_match(&target, &doc), vec![0]);
    }

    #[test]
    fn fallback_identity_sentence_wins() {
        let doc = sentences(&[
            "Alpha beta gamma.",
            "Margins improved nicely.",
            "Delta epsilon zeta.",
        ]);
        let model = fit_lexical(&doc, 1 << 12).unwrap();
        let vecs: Vec<SentenceVec> = doc.iter().map(|s| model.encode(s)).collect();
        let target = model.encode(&Sentence::new("Margins improved nicely.", 0));
        assert_eq!(similarity_fallback(&target, &vecs).unwrap(), 1);
    }

    #[test]
    fn fallback_ties_take_smallest_index() {
        let a = SentenceVec::new(vec![1.0, 0.0]);
        let doc = vec![
            SentenceVec::new(vec![2.0, 0.0]),
            SentenceVec::new(vec![0.0, 1.0]),
            SentenceVec::new(vec![3.0, 0.0]),
        ];
        assert_eq!(similarity_fallback(&a, &doc).unwrap(), 0);
    }

    #[test]
    fn fallback_matches_brute_force_scan() {
        let mut rng = crate::rng::SplitMix64::new(12);
        for _ in 0..20 {
            let doc: Vec<SentenceVec> = (0..10)
                .map(|_| SentenceVec::new((0..8).map(|_| rng.next_symmetric(1.0)).collect()))
                .collect();
            let target = SentenceVec::new((0..8).map(|_| rng.next_symmetric(1.0)).collect());
            let fast = similarity_fallback(&target, &doc).unwrap();
            // plain scan, recomputing cosines from scratch
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, v) in doc.iter().enumerate() {
                let dot: f64 = target.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
                let na: f64 = target.values.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
                let score = if na == 0.0 || nb == 0.0 { -1.0 } else { dot / (na * nb) };
                if score > best_score {
                    best_score = score;
                    best = i;
                }
            }
            assert_eq!(fast, best);
        }
    }

    #[test]
    fn all_zero_doc_vectors_fail() {
        let target = SentenceVec::new(vec![1.0]);
        let doc = vec![SentenceVec::new(vec![0.0]), SentenceVec::new(vec![0.0])];
        assert_eq!(
            similarity_fallback(&target, &doc),
            Err(LabelError::FallbackFailed)
        );
    }

    #[test]
    fn build_labels_routes_numeric_and_similarity() {
        let pair = make_pair(
            &[
                "Good morning everyone and thanks for joining.",
                "Revenue rose 27 percent to $667 million in the quarter.",
                "We saw broad-based strength across segments.",
                "Adjusted earnings per share was $3.15.",
            ],
            &[
                "q2 revenue rose 27 percent to $667 million.",
                "qtrly adjusted earnings per share $3.15.",
                "saw broad-based strength across segments.",
            ],
        );
        let model = fit_lexical(&pair.transcript.sentences, 1 << 12).unwrap();
        let labels = build_labels(&pair, &model).unwrap();
        assert_eq!(labels.labels, vec![0, 1, 1, 1]);
        assert_eq!(labels.alignments.len(), 3);
        assert_eq!(labels.alignments[0].kind, MatchKind::Numeric);
        assert_eq!(labels.alignments[1].kind, MatchKind::Numeric);
        assert_eq!(labels.alignments[2].kind, MatchKind::Similarity);
        assert_eq!(labels.alignments[2].matched, vec![2]);
    }

    #[test]
    fn planted_sources_are_recovered() {
        let filler = [
            "Thanks everyone for joining us today.",
            "Weather was mild across our regions.",
            "We continue to invest in our people.",
        ];
        let planted = [
            "Net sales grew 14 percent to $512 million.",
            "Free cash flow reached $98 million in the period.",
        ];
        let doc = [filler[0], planted[0], filler[1], planted[1], filler[2]];
        let bullets = [
            "net sales grew 14 percent to $512 million.",
            "free cash flow $98 million.",
        ];
        let pair = make_pair(&doc, &bullets);
        let model = fit_lexical(&pair.transcript.sentences, 1 << 12).unwrap();
        let labels = build_labels(&pair, &model).unwrap();
        assert_eq!(labels.positive_indices(), vec![1, 3]);
        assert!(labels
            .alignments
            .iter()
            .all(|a| a.kind == MatchKind::Numeric));
    }

    #[test]
    fn determinism_given_pair_and_encoder() {
        let pair = make_pair(
            &["Revenue was $667 million.", "Margins grew a lot."],
            &["revenue $667 million.", "margins grew."],
        );
        let model = fit_lexical(&pair.transcript.sentences, 1 << 12).unwrap();
        let a = build_labels(&pair, &model).unwrap();
        let b = build_labels(&pair, &model).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn paraphrase_pairs_one_per_alignment_edge() {
        let pair = make_pair(
            &[
                "Guidance is $2.74 billion to $2.79 billion.",
                "We reaffirm revenue of $2.74 billion to $2.79 billion.",
            ],
            &["sees fy revenue $2.74 billion to $2.79 billion."],
        );
        let model = fit_lexical(&pair.transcript.sentences, 1 << 12).unwrap();
        let labels = build_labels(&pair, &model).unwrap();
        let (pairs, dropped) = build_paraphrase_pairs(&pair, &labels);
        assert_eq!(pairs.len(), 2);
        assert_eq!(dropped, 0);
        assert_eq!(pairs[0].pair_id, "p1:0:0");
        assert_eq!(pairs[1].pair_id, "p1:0:1");
        assert_eq!(pairs[0].target, pairs[1].target);
        // numeric containment of placeholder keys
        for pp in &pairs {
            let src = masked_key_counts(&pp.source);
            let tgt = masked_key_counts(&pp.target);
            assert!(contains_all(&src, &tgt));
        }
    }

    #[test]
    fn paraphrase_pair_without_numerals_has_empty_placeholders() {
        let pair = make_pair(
            &["Margins improved across the board."],
            &["margins improved."],
        );
        let model = fit_lexical(&pair.transcript.sentences, 1 << 12).unwrap();
        let labels = build_labels(&pair, &model).unwrap();
        let (pairs, _) = build_paraphrase_pairs(&pair, &labels);
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].source.placeholders.is_empty());
        assert!(pairs[0].target.placeholders.is_empty());
    }

    #[test]
    fn label_count_at_least_distinct_numeric_matches() {
        let pair = make_pair(
            &[
                "Revenue was $667 million.",
                "EPS was $1.52 in the quarter.",
            ],
            &["revenue $667 million.", "eps $1.52."],
        );
        let model = fit_lexical(&pair.transcript.sentences, 1 << 12).unwrap();
        let labels = build_labels(&pair, &model).unwrap();
        let distinct: std::collections::HashSet<usize> = labels
            .alignments
            .iter()
            .filter(|a| a.kind == MatchKind::Numeric)
            .flat_map(|a| a.matched.iter().copied())
            .collect();
        let total: usize = labels.labels.iter().map(|y| *y as usize).sum();
        assert!(total >= distinct.len());
    }
}
