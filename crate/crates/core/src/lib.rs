//! Summarization toolkit for earnings-call transcripts.
//!
//! The pipeline turns raw call transcripts and the short bullet-point news
//! articles that cover them into a supervised summarization dataset, trains a
//! numeral-aware extractive sentence selector on it, rewrites the selected
//! sentences into telegram-style bullets without ever touching the numbers,
//! and scores the results (ROUGE, numeral precision) against references.
//!
//! Modules map onto pipeline stages:
//!
//! - [`text`] — sentence splitting, tokenization, the financial numeral
//!   grammar, and reversible placeholder masking
//! - [`corpus`] — cleaning, document/summary pairing, and corpus splits
//! - [`stats`] — extractive-fragment statistics (coverage, density,
//!   compression) and salient-unigram distributions
//! - [`encoder`] — hashed tf-idf sentence vectors and precomputed-embedding
//!   loading
//! - [`labels`] — oracle extractive labels and paraphrase training pairs
//! - [`extractor`] — the bi-directional recurrent sentence classifier with
//!   exact gradients, training, and budgeted selection
//! - [`paraphrase`] — placeholder-protected rewriting into bullets
//! - [`metrics`] — ROUGE-1/2/L, numeral precision, report assembly
//! - [`baselines`] — LexRank, lead, and the extractive oracle

pub mod baselines;
pub mod corpus;
pub mod date;
pub mod encoder;
pub mod extractor;
pub mod labels;
pub mod metrics;
pub mod paraphrase;
pub mod records;
pub mod rng;
pub mod stats;
pub mod text;
