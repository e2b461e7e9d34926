//! Extractiveness statistics: greedy shared-fragment extraction between a
//! document and its summary, the coverage/density/compression measures
//! built on it, and the positional distribution of salient summary words
//! across the document.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("statistic undefined for an empty summary")]
    EmptySummary,
    #[error("no salient unigram from the summary occurs in the document")]
    NoSalientOccurrence,
}

/// Fixed English stopword list, versioned with the repo so the salient
/// unigram statistics are reproducible.
pub static STOPWORDS: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| include_str!("../data/stopwords.txt").split_whitespace().collect());

/// One shared token run: `length` tokens starting at `doc_start` in the
/// document and `summary_start` in the summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub doc_start: usize,
    pub summary_start: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentSet {
    pub fragments: Vec<Fragment>,
    pub summary_len: usize,
    pub doc_len: usize,
}

/// Greedy left-to-right fragment extraction. At each summary position the
/// longest common prefix of the summary suffix against any document
/// position is taken (ties resolved to the smallest document start); if no
/// token matches at all the position is left unmatched and skipped.
pub fn extract_fragments(doc: &[String], summary: &[String]) -> FragmentSet {
    let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, token) in doc.iter().enumerate() {
        positions.entry(token.as_str()).or_default().push(j);
    }
    let mut fragments = Vec::new();
    let mut i = 0;
    while i < summary.len() {
        let mut best_len = 0;
        let mut best_start = 0;
        if let Some(starts) = positions.get(summary[i].as_str()) {
            for &j in starts {
                let mut len = 0;
                while i + len < summary.len()
                    && j + len < doc.len()
                    && summary[i + len] == doc[j + len]
                {
                    len += 1;
                }
                if len > best_len {
                    best_len = len;
                    best_start = j;
                }
            }
        }
        if best_len > 0 {
            fragments.push(Fragment {
                doc_start: best_start,
                summary_start: i,
                length: best_len,
            });
            i += best_len;
        } else {
            i += 1;
        }
    }
    FragmentSet {
        fragments,
        summary_len: summary.len(),
        doc_len: doc.len(),
    }
}

/// Fraction of summary tokens covered by shared fragments.
pub fn coverage(f: &FragmentSet) -> Result<f64, StatsError> {
    if f.summary_len == 0 {
        return Err(StatsError::EmptySummary);
    }
    let covered: usize = f.fragments.iter().map(|fr| fr.length).sum();
    Ok(covered as f64 / f.summary_len as f64)
}

/// Mean squared fragment length per summary token; rewards long verbatim
/// runs over scattered single-word overlap.
pub fn density(f: &FragmentSet) -> Result<f64, StatsError> {
    if f.summary_len == 0 {
        return Err(StatsError::EmptySummary);
    }
    let squared: usize = f.fragments.iter().map(|fr| fr.length * fr.length).sum();
    Ok(squared as f64 / f.summary_len as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionOutcome {
    pub mean_ratio: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Mean of per-pair document/summary token ratios. This is deliberately the
/// mean of ratios, not the ratio of mean lengths: with 2.9K-word documents
/// and 50-word summaries the two differ wildly, and the per-pair mean is
/// the one that describes how hard an individual document compresses.
/// Pairs with a zero-token summary are skipped and counted.
pub fn compression(token_counts: impl IntoIterator<Item = (usize, usize)>) -> CompressionOutcome {
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (doc_tokens, summary_tokens) in token_counts {
        if summary_tokens == 0 {
            skipped += 1;
            continue;
        }
        sum += doc_tokens as f64 / summary_tokens as f64;
        used += 1;
    }
    CompressionOutcome {
        mean_ratio: if used == 0 { 0.0 } else { sum / used as f64 },
        pairs_used: used,
        pairs_skipped: skipped,
    }
}

/// Document token range of segment `k` of 4: floor-divided lengths with the
/// remainder spread over the earliest segments.
fn segment_bounds(doc_len: usize, k: usize) -> (usize, usize) {
    let base = doc_len / 4;
    let extra = doc_len % 4;
    let start = k * base + k.min(extra);
    let len = base + usize::from(k < extra);
    (start, start + len)
}

/// Share of salient-unigram occurrences (summary token types minus
/// stopwords) falling in each document quarter. Occurrences are counted,
/// not types, so a share above 0.25 signals repetition.
pub fn salient_unigram_distribution(
    doc: &[String],
    summary: &[String],
) -> Result<[f64; 4], StatsError> {
    let salient: HashSet<&str> = summary
        .iter()
        .map(String::as_str)
        .filter(|t| !STOPWORDS.contains(t))
        .collect();
    let mut counts = [0usize; 4];
    for (k, count) in counts.iter_mut().enumerate() {
        let (start, end) = segment_bounds(doc.len(), k);
        *count = doc[start..end]
            .iter()
            .filter(|t| salient.contains(t.as_str()))
            .count();
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(StatsError::NoSalientOccurrence);
    }
    Ok(counts.map(|c| c as f64 / total as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub coverage: f64,
    pub density: f64,
    pub compression: f64,
    pub mean_doc_tokens: f64,
    pub mean_summary_tokens: f64,
    pub quartile_shares: [f64; 4],
    pub pairs_without_summary: usize,
    pub pairs_without_salient_overlap: usize,
}

/// Aggregate the per-pair statistics over a corpus of (document tokens,
/// summary tokens) pairs. Pairs whose summary is empty contribute to the
/// counts but to none of the means.
pub fn corpus_stats(pairs: &[(Vec<String>, Vec<String>)]) -> CorpusStats {
    struct PerPair {
        coverage: Option<f64>,
        density: Option<f64>,
        shares: Option<[f64; 4]>,
        doc_tokens: usize,
        summary_tokens: usize,
    }
    let per_pair: Vec<PerPair> = pairs
        .par_iter()
        .map(|(doc, summary)| {
            let fragments = extract_fragments(doc, summary);
            PerPair {
                coverage: coverage(&fragments).ok(),
                density: density(&fragments).ok(),
                shares: salient_unigram_distribution(doc, summary).ok(),
                doc_tokens: doc.len(),
                summary_tokens: summary.len(),
            }
        })
        .collect();

    let mean = |values: Vec<f64>| -> f64 {
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };
    let coverage_mean = mean(per_pair.iter().filter_map(|p| p.coverage).collect());
    let density_mean = mean(per_pair.iter().filter_map(|p| p.density).collect());
    let comp = compression(per_pair.iter().map(|p| (p.doc_tokens, p.summary_tokens)));
    let share_vecs: Vec<[f64; 4]> = per_pair.iter().filter_map(|p| p.shares).collect();
    let mut quartile_shares = [0.0; 4];
    if !share_vecs.is_empty() {
        for shares in &share_vecs {
            for k in 0..4 {
                quartile_shares[k] += shares[k];
            }
        }
        for share in &mut quartile_shares {
            *share /= share_vecs.len() as f64;
        }
    }
    CorpusStats {
        n_docs: pairs.len(),
        coverage: coverage_mean,
        density: density_mean,
        compression: comp.mean_ratio,
        mean_doc_tokens: mean(per_pair.iter().map(|p| p.doc_tokens as f64).collect()),
        mean_summary_tokens: mean(per_pair.iter().map(|p| p.summary_tokens as f64).collect()),
        quartile_shares,
        pairs_without_summary: comp.pairs_skipped,
        pairs_without_salient_overlap: per_pair.len()
            - per_pair.iter().filter(|p| p.shares.is_some()).count(),
    }
}
