//! Corpus ingestion: clean raw transcripts and summary articles, pair
//! documents with the articles that cover them, and split the corpus.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::CivilDate;
use crate::rng::SplitMix64;
use crate::text::{split_sentences, Sentence};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("transcript {source_id} has no prepared remarks")]
    NoPreparedRemarks { source_id: String },
    #[error("multiple transcripts for {company_code} on {event_date}: {ids:?}")]
    AmbiguousEvent {
        company_code: String,
        event_date: CivilDate,
        ids: Vec<String>,
    },
    #[error("cannot split {0} pairs, need at least 10")]
    SplitTooSmall(usize),
    #[error("pair {pair_id} violates {what}")]
    InvalidPair { pair_id: String, what: String },
}

/// One raw speaker turn (or section heading) of a transcript.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Block {
    pub speaker_role: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawTranscript {
    pub source_id: String,
    pub company_code: String,
    pub event_date: CivilDate,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawArticle {
    pub source_id: String,
    pub company_code: String,
    pub post_date: CivilDate,
    pub body: String,
}

/// Cleaned transcript: prepared remarks only, sentence-split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub source_id: String,
    pub company_code: String,
    pub event_date: CivilDate,
    pub sentences: Vec<Sentence>,
}

/// Cleaned article: deduplicated bullets with estimate boilerplate removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryArticle {
    pub source_id: String,
    pub company_code: String,
    pub post_date: CivilDate,
    pub bullets: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentSummaryPair {
    pub pair_id: String,
    pub transcript: Transcript,
    pub summary: SummaryArticle,
    pub merged_from: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

fn is_operator(role: &str) -> bool {
    let role = role.to_lowercase();
    role.contains("operator") || role.contains("moderator")
}

/// A block opens the Q&A section when its heading names both questions and
/// answers, or when the operator announces the question session.
fn starts_q_and_a(block: &Block) -> bool {
    let role = block.speaker_role.to_lowercase();
    if role.contains("question") && role.contains("answer") {
        return true;
    }
    is_operator(&block.speaker_role) && block.text.to_lowercase().contains("question")
}

/// Strip the moderator introduction and everything from the Q&A section on,
/// then sentence-split what remains. Transcripts that open directly with
/// Q&A carry no summarizable content and are rejected.
pub fn clean_transcript(raw: &RawTranscript) -> Result<Transcript, CorpusError> {
    let first_speaker = raw
        .blocks
        .iter()
        .position(|b| !is_operator(&b.speaker_role))
        .unwrap_or(raw.blocks.len());
    let blocks = &raw.blocks[first_speaker..];
    let qa_start = blocks.iter().position(starts_q_and_a).unwrap_or(blocks.len());
    let kept = &blocks[..qa_start];

    let mut sentences = Vec::new();
    for block in kept {
        for split in split_sentences(&block.text) {
            let index = sentences.len();
            sentences.push(Sentence::new(split.text, index));
        }
    }
    if sentences.is_empty() {
        return Err(CorpusError::NoPreparedRemarks {
            source_id: raw.source_id.clone(),
        });
    }
    Ok(Transcript {
        source_id: raw.source_id.clone(),
        company_code: raw.company_code.clone(),
        event_date: raw.event_date,
        sentences,
    })
}

const ESTIMATE_MARKER: [&str; 3] = ["refinitiv", "ibes", "data"];

/// True when the marker phrase occurs within the sentence's trailing four
/// tokens.
fn ends_with_estimate_marker(sentence: &Sentence) -> bool {
    let tokens = &sentence.tokens;
    let window_start = tokens.len().saturating_sub(4);
    let window = &tokens[window_start..];
    window
        .windows(ESTIMATE_MARKER.len())
        .any(|w| w.iter().map(String::as_str).eq(ESTIMATE_MARKER))
}

/// Sentence-split an article body, drop analyst-estimate boilerplate, and
/// deduplicate exact repeats (first occurrence wins). May legitimately
/// produce zero bullets; the caller decides whether to keep such articles.
pub fn clean_summary(raw: &RawArticle) -> SummaryArticle {
    let mut seen = HashSet::new();
    let mut bullets = Vec::new();
    for sentence in split_sentences(&raw.body) {
        if ends_with_estimate_marker(&sentence) {
            continue;
        }
        if !seen.insert(sentence.text.clone()) {
            continue;
        }
        let index = bullets.len();
        bullets.push(Sentence::new(sentence.text, index));
    }
    SummaryArticle {
        source_id: raw.source_id.clone(),
        company_code: raw.company_code.clone(),
        post_date: raw.post_date,
        bullets,
    }
}

/// Join transcripts with articles posted by the same company on the event
/// day or the day after. Multiple window matches are merged into one
/// summary: distinct bullets concatenated in (post_date, source_id) order.
/// Transcripts without any candidate article are omitted. `max_merge`
/// caps how many articles may merge into one summary (None = unlimited).
pub fn pair_documents(
    transcripts: &[Transcript],
    articles: &[SummaryArticle],
    max_merge: Option<usize>,
) -> Result<Vec<DocumentSummaryPair>, CorpusError> {
    let mut by_event: BTreeMap<(&str, CivilDate), Vec<&str>> = BTreeMap::new();
    for t in transcripts {
        by_event
            .entry((t.company_code.as_str(), t.event_date))
            .or_default()
            .push(&t.source_id);
    }
    for ((code, date), ids) in &by_event {
        if ids.len() > 1 {
            return Err(CorpusError::AmbiguousEvent {
                company_code: (*code).to_string(),
                event_date: *date,
                ids: ids.iter().map(|s| s.to_string()).collect(),
            });
        }
    }

    let mut pairs = Vec::new();
    for transcript in transcripts {
        let mut candidates: Vec<&SummaryArticle> = articles
            .iter()
            .filter(|a| {
                a.company_code == transcript.company_code
                    && (0..=1).contains(&a.post_date.days_since(transcript.event_date))
            })
            .collect();
        candidates.sort_by(|a, b| (a.post_date, &a.source_id).cmp(&(b.post_date, &b.source_id)));
        if let Some(cap) = max_merge {
            candidates.truncate(cap);
        }
        if candidates.is_empty() {
            continue;
        }

        let mut seen = HashSet::new();
        let mut bullets = Vec::new();
        for article in &candidates {
            for bullet in &article.bullets {
                if seen.insert(bullet.text.clone()) {
                    let index = bullets.len();
                    bullets.push(Sentence::new(bullet.text.clone(), index));
                }
            }
        }
        let merged_from: Vec<String> = candidates.iter().map(|a| a.source_id.clone()).collect();
        pairs.push(DocumentSummaryPair {
            pair_id: transcript.source_id.clone(),
            transcript: transcript.clone(),
            summary: SummaryArticle {
                source_id: merged_from.join("+"),
                company_code: transcript.company_code.clone(),
                post_date: candidates[0].post_date,
                bullets,
            },
            merged_from,
        });
    }
    Ok(pairs)
}

/// Independent re-check of the pairing invariants: matching company codes
/// and every merged article inside the one-day window.
pub fn validate_pairs(
    pairs: &[DocumentSummaryPair],
    articles: &[SummaryArticle],
) -> Result<(), CorpusError> {
    let by_id: BTreeMap<&str, &SummaryArticle> = articles
        .iter()
        .map(|a| (a.source_id.as_str(), a))
        .collect();
    for pair in pairs {
        if pair.summary.company_code != pair.transcript.company_code {
            return Err(CorpusError::InvalidPair {
                pair_id: pair.pair_id.clone(),
                what: "company code mismatch".to_string(),
            });
        }
        for id in &pair.merged_from {
            let article = by_id.get(id.as_str()).ok_or_else(|| CorpusError::InvalidPair {
                pair_id: pair.pair_id.clone(),
                what: format!("merged article `{id}` not found"),
            })?;
            let gap = article.post_date.days_since(pair.transcript.event_date);
            if !(0..=1).contains(&gap) {
                return Err(CorpusError::InvalidPair {
                    pair_id: pair.pair_id.clone(),
                    what: format!("article `{id}` posted {gap} days after the event"),
                });
            }
            if article.company_code != pair.transcript.company_code {
                return Err(CorpusError::InvalidPair {
                    pair_id: pair.pair_id.clone(),
                    what: format!("article `{id}` company code mismatch"),
                });
            }
        }
    }
    Ok(())
}

/// Seeded random 70/10/20 split. Sizes are floor(0.7 n) and floor(0.1 n)
/// with the remainder going to test, which keeps the documented sizes for
/// both 10 and 2,425 inputs.
pub fn split_corpus(pair_ids: &[String], seed: u64) -> Result<CorpusSplit, CorpusError> {
    let n = pair_ids.len();
    if n < 10 {
        return Err(CorpusError::SplitTooSmall(n));
    }
    let mut shuffled: Vec<String> = pair_ids.to_vec();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut shuffled);
    let n_train = n * 7 / 10;
    let n_val = n / 10;
    let test = shuffled.split_off(n_train + n_val);
    let validation = shuffled.split_off(n_train);
    Ok(CorpusSplit {
        train: shuffled,
        validation,
        test,
        seed,
    })
}


/// Slim on-disk form of a [`Transcript`]: sentence texts only, tokens
/// rebuilt on load by the shared tokenizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub source_id: String,
    pub company_code: String,
    pub event_date: CivilDate,
    pub sentences: Vec<String>,
}

impl From<&Transcript> for TranscriptRecord {
    fn from(t: &Transcript) -> Self {
        Self {
            source_id: t.source_id.clone(),
            company_code: t.company_code.clone(),
            event_date: t.event_date,
            sentences: t.sentences.iter().map(|s| s.text.clone()).collect(),
        }
    }
}

impl TranscriptRecord {
    pub fn into_transcript(self) -> Transcript {
        Transcript {
            source_id: self.source_id,
            company_code: self.company_code,
            event_date: self.event_date,
            sentences: self
                .sentences
                .into_iter()
                .enumerate()
                .map(|(i, text)| Sentence::new(text, i))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub source_id: String,
    pub company_code: String,
    pub post_date: CivilDate,
    pub bullets: Vec<String>,
}

impl From<&SummaryArticle> for ArticleRecord {
    fn from(a: &SummaryArticle) -> Self {
        Self {
            source_id: a.source_id.clone(),
            company_code: a.company_code.clone(),
            post_date: a.post_date,
            bullets: a.bullets.iter().map(|s| s.text.clone()).collect(),
        }
    }
}

impl ArticleRecord {
    pub fn into_article(self) -> SummaryArticle {
        SummaryArticle {
            source_id: self.source_id,
            company_code: self.company_code,
            post_date: self.post_date,
            bullets: self
                .bullets
                .into_iter()
                .enumerate()
                .map(|(i, text)| Sentence::new(text, i))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub transcript: TranscriptRecord,
    pub summary: ArticleRecord,
    pub merged_from: Vec<String>,
}

impl From<&DocumentSummaryPair> for PairRecord {
    fn from(p: &DocumentSummaryPair) -> Self {
        Self {
            pair_id: p.pair_id.clone(),
            transcript: (&p.transcript).into(),
            summary: (&p.summary).into(),
            merged_from: p.merged_from.clone(),
        }
    }
}

impl PairRecord {
    pub fn into_pair(self) -> DocumentSummaryPair {
        DocumentSummaryPair {
            pair_id: self.pair_id,
            transcript: self.transcript.into_transcript(),
            summary: self.summary.into_article(),
            merged_from: self.merged_from,
        }
    }
}
