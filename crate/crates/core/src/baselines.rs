//! Reference summarizers: LexRank over the shared sentence encoder, the
//! lead baseline, and the extractive oracle upper bound.

use crate::corpus::DocumentSummaryPair;
use crate::encoder::{SentenceEncoder, SentenceVec};
use crate::extractor::select;
use crate::labels::{build_labels, LabelError};
use crate::text::Sentence;

pub const LEXRANK_THRESHOLD: f64 = 0.1;
pub const LEXRANK_DAMPING: f64 = 0.85;
const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 200;

/// Stationary scores of the damped random walk on the thresholded cosine
/// similarity graph. Rows without any retained edge (zero vectors) act as
/// uniform teleports. Scores are nonnegative and sum to one.
pub fn lexrank_scores(vectors: &[SentenceVec], threshold: f64, damping: f64) -> Vec<f64> {
    let n = vectors.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![1.0];
    }
    // row-stochastic transition matrix over thresholded similarities
    let mut transition = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            let sim = vectors[i].cosine(&vectors[j]).unwrap_or(0.0);
            let weight = if sim >= threshold { sim } else { 0.0 };
            transition[i][j] = weight;
            row_sum += weight;
        }
        if row_sum == 0.0 {
            for cell in &mut transition[i] {
                *cell = 1.0 / n as f64;
            }
        } else {
            for cell in &mut transition[i] {
                *cell /= row_sum;
            }
        }
    }

    let teleport = (1.0 - damping) / n as f64;
    let mut scores = vec![1.0 / n as f64; n];
    for _ in 0..POWER_MAX_ITERS {
        let mut next = vec![teleport; n];
        for i in 0..n {
            let score = scores[i];
            if score == 0.0 {
                continue;
            }
            for j in 0..n {
                next[j] += damping * transition[i][j] * score;
            }
        }
        let delta = scores
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        scores = next;
        if delta < POWER_TOLERANCE {
            break;
        }
    }
    scores
}

/// LexRank summary: score sentences by graph centrality, then select under
/// the shared word budget.
pub fn lexrank(doc: &[Sentence], encoder: &dyn SentenceEncoder, word_budget: usize) -> Vec<usize> {
    if doc.is_empty() {
        return Vec::new();
    }
    let vectors: Vec<SentenceVec> = doc.iter().map(|s| encoder.encode(s)).collect();
    let scores = lexrank_scores(&vectors, LEXRANK_THRESHOLD, LEXRANK_DAMPING);
    select(&scores, doc, word_budget)
}

/// Leading sentences until the word budget is spent, always at least one.
pub fn lead(doc: &[Sentence], word_budget: usize) -> Vec<usize> {
    let mut taken = Vec::new();
    let mut words = 0usize;
    for sentence in doc {
        taken.push(sentence.index);
        words += sentence.tokens.len();
        if words >= word_budget {
            break;
        }
    }
    taken
}

/// The oracle upper bound: exactly the label-positive sentences, in
/// document order.
pub fn ext_oracle(
    pair: &DocumentSummaryPair,
    encoder: &dyn SentenceEncoder,
) -> Result<Vec<usize>, LabelError> {
    Ok(build_labels(pair, encoder)?.positive_indices())
}
