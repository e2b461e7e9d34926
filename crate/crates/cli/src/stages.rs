//! Pipeline stages. Each stage reads its declared inputs, does its work
//! through the core library, and writes line-delimited artifacts with a
//! provenance header. Identical config and inputs produce byte-identical
//! outputs regardless of thread count.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use callsum_core::baselines;
use callsum_core::corpus::{
    clean_summary, clean_transcript, pair_documents, split_corpus, validate_pairs, ArticleRecord,
    CorpusError, DocumentSummaryPair, PairRecord, RawArticle, RawTranscript, SummaryArticle,
    TranscriptRecord,
};
use callsum_core::encoder::{fit_lexical, load_precomputed, SentenceEncoder, SentenceVec};
use callsum_core::extractor::{
    forward, load_checkpoint, save_checkpoint, select, train, Dims, ExtractorParams, TrainConfig,
    TrainExample,
};
use callsum_core::labels::{build_labels, build_paraphrase_pairs, Alignment};
use callsum_core::metrics::{evaluate, MetricsReport};
use callsum_core::paraphrase::{
    export_backend_training_set, paraphrase, IdentityBackend, ParaphraseOutcome, RewriteBackend,
    RuleBackend, SubprocessBackend,
};
use callsum_core::records::{read_records, write_records};
use callsum_core::stats::corpus_stats;
use callsum_core::text::Sentence;

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("missing input file: {0}")]
    MissingInput(PathBuf),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Other(String),
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::MissingInput(_) => 3,
            StageError::Config(_) | StageError::Parse(_) => 4,
            StageError::Other(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StageError::MissingInput(_) => "missing_input",
            StageError::Config(_) => "config",
            StageError::Parse(_) => "parse",
            StageError::Other(_) => "error",
        }
    }
}

fn other(e: impl std::fmt::Display) -> StageError {
    StageError::Other(e.to_string())
}

impl From<callsum_core::records::RecordError> for StageError {
    fn from(e: callsum_core::records::RecordError) -> Self {
        use callsum_core::records::RecordError;
        match e {
            RecordError::Malformed { .. } | RecordError::MissingHeader { .. }
            | RecordError::WrongFormat { .. } => StageError::Parse(e.to_string()),
            RecordError::Io { .. } => StageError::Other(e.to_string()),
        }
    }
}

impl From<CorpusError> for StageError {
    fn from(e: CorpusError) -> Self {
        StageError::Other(e.to_string())
    }
}

fn require_input(path: &Path) -> Result<(), StageError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(StageError::MissingInput(path.to_path_buf()))
    }
}

/// Read headerless line-delimited JSON (the raw external inputs).
fn read_raw<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, StageError> {
    require_input(path)?;
    let file = File::open(path).map_err(other)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(other)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            StageError::Parse(format!("{}:{}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

pub struct IngestReport {
    pub transcripts: usize,
    pub rejected: usize,
    pub articles: usize,
}

pub fn ingest(
    raw_transcripts: &Path,
    raw_articles: &Path,
    out_transcripts: &Path,
    out_articles: &Path,
    cfg: &RunConfig,
) -> Result<IngestReport, StageError> {
    let raw_t: Vec<RawTranscript> = read_raw(raw_transcripts)?;
    let raw_a: Vec<RawArticle> = read_raw(raw_articles)?;

    let mut cleaned = Vec::new();
    let mut rejected = 0usize;
    for raw in &raw_t {
        match clean_transcript(raw) {
            Ok(t) => cleaned.push(t),
            Err(CorpusError::NoPreparedRemarks { .. }) => rejected += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let articles: Vec<SummaryArticle> = raw_a.iter().map(clean_summary).collect();

    write_records(
        out_transcripts,
        &cfg.header("transcripts-clean"),
        cleaned.iter().map(TranscriptRecord::from),
    )?;
    write_records(
        out_articles,
        &cfg.header("articles-clean"),
        articles.iter().map(ArticleRecord::from),
    )?;
    Ok(IngestReport {
        transcripts: cleaned.len(),
        rejected,
        articles: articles.len(),
    })
}

pub fn pair(
    transcripts_path: &Path,
    articles_path: &Path,
    out: &Path,
    cfg: &RunConfig,
) -> Result<usize, StageError> {
    require_input(transcripts_path)?;
    require_input(articles_path)?;
    let (_, t_records): (_, Vec<TranscriptRecord>) =
        read_records(transcripts_path, "transcripts-clean")?;
    let (_, a_records): (_, Vec<ArticleRecord>) = read_records(articles_path, "articles-clean")?;
    let transcripts: Vec<_> = t_records.into_iter().map(|r| r.into_transcript()).collect();
    let articles: Vec<_> = a_records.into_iter().map(|r| r.into_article()).collect();
    let max_merge = if cfg.max_merge == 0 {
        None
    } else {
        Some(cfg.max_merge)
    };
    let pairs = pair_documents(&transcripts, &articles, max_merge)?;
    validate_pairs(&pairs, &articles)?;
    write_records(out, &cfg.header("pairs"), pairs.iter().map(PairRecord::from))?;
    Ok(pairs.len())
}

pub fn read_pairs(path: &Path) -> Result<Vec<DocumentSummaryPair>, StageError> {
    require_input(path)?;
    let (_, records): (_, Vec<PairRecord>) = read_records(path, "pairs")?;
    Ok(records.into_iter().map(|r| r.into_pair()).collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitRecord {
    pair_id: String,
    subset: String,
}

pub fn split(pairs_path: &Path, out: &Path, cfg: &RunConfig) -> Result<(), StageError> {
    let pairs = read_pairs(pairs_path)?;
    let ids: Vec<String> = pairs.iter().map(|p| p.pair_id.clone()).collect();
    let split = split_corpus(&ids, cfg.seed)?;
    let mut records = Vec::new();
    for (subset, ids) in [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        for id in ids {
            records.push(SplitRecord {
                pair_id: id.clone(),
                subset: subset.to_string(),
            });
        }
    }
    write_records(out, &cfg.header("split"), records)?;
    Ok(())
}

pub fn read_split(path: &Path) -> Result<BTreeMap<String, String>, StageError> {
    require_input(path)?;
    let (_, records): (_, Vec<SplitRecord>) = read_records(path, "split")?;
    Ok(records
        .into_iter()
        .map(|r| (r.pair_id, r.subset))
        .collect())
}

pub fn stats(
    pairs_path: &Path,
    out: &Path,
    table_out: Option<&Path>,
    cfg: &RunConfig,
) -> Result<String, StageError> {
    let pairs = read_pairs(pairs_path)?;
    let token_pairs: Vec<(Vec<String>, Vec<String>)> = pairs
        .iter()
        .map(|p| {
            let doc: Vec<String> = p
                .transcript
                .sentences
                .iter()
                .flat_map(|s| s.tokens.iter().cloned())
                .collect();
            let summary: Vec<String> = p
                .summary
                .bullets
                .iter()
                .flat_map(|s| s.tokens.iter().cloned())
                .collect();
            (doc, summary)
        })
        .collect();
    let stats = corpus_stats(&token_pairs);
    write_records(out, &cfg.header("stats"), [&stats])?;

    let mut table = String::new();
    table.push_str(&format!("{:<24} {:>12}\n", "statistic", "value"));
    table.push_str(&format!("{:<24} {:>12}\n", "documents", stats.n_docs));
    for (name, value) in [
        ("coverage", stats.coverage),
        ("density", stats.density),
        ("compression", stats.compression),
        ("mean doc tokens", stats.mean_doc_tokens),
        ("mean summary tokens", stats.mean_summary_tokens),
    ] {
        table.push_str(&format!("{name:<24} {value:>12.4}\n"));
    }
    table.push_str("\nsalient-unigram share by document quarter\n");
    for (k, share) in stats.quartile_shares.iter().enumerate() {
        let bar = "#".repeat((share * 40.0).round() as usize);
        table.push_str(&format!("q{} {share:>8.4} {bar}\n", k + 1));
    }
    if let Some(path) = table_out {
        std::fs::write(path, &table).map_err(other)?;
    }
    Ok(table)
}

fn resolve_encoder(cfg: &RunConfig) -> Result<EncoderChoice, StageError> {
    if cfg.encoder == "lexical" {
        Ok(EncoderChoice::Lexical)
    } else if let Some(path) = cfg.encoder.strip_prefix("precomputed:") {
        Ok(EncoderChoice::Precomputed(PathBuf::from(path)))
    } else {
        Err(StageError::Config(format!(
            "unknown encoder `{}` (use `lexical` or `precomputed:<path>`)",
            cfg.encoder
        )))
    }
}

enum EncoderChoice {
    Lexical,
    Precomputed(PathBuf),
}

/// Vectors for one pair's document sentences and bullets.
pub struct PairVectors {
    pub doc: Vec<SentenceVec>,
    pub summary: Vec<SentenceVec>,
}

/// Sentence ids used by the precomputed-embedding interface:
/// `<pair_id>/d<index>` for document sentences, `<pair_id>/s<index>` for
/// summary bullets.
pub fn doc_sentence_id(pair_id: &str, index: usize) -> String {
    format!("{pair_id}/d{index}")
}

pub fn summary_sentence_id(pair_id: &str, index: usize) -> String {
    format!("{pair_id}/s{index}")
}

enum PairEncoder {
    Lexical(callsum_core::encoder::LexicalModel),
    Precomputed(callsum_core::encoder::PrecomputedEmbeddings),
}

impl PairEncoder {
    fn build(cfg: &RunConfig, pairs: &[DocumentSummaryPair]) -> Result<Self, StageError> {
        match resolve_encoder(cfg)? {
            EncoderChoice::Lexical => {
                let all: Vec<&Sentence> = pairs
                    .iter()
                    .flat_map(|p| p.transcript.sentences.iter().chain(p.summary.bullets.iter()))
                    .collect();
                let config_err = |e: callsum_core::encoder::EncoderError| match e {
                    callsum_core::encoder::EncoderError::ConfigError(_) => {
                        StageError::Config(e.to_string())
                    }
                    other_err => StageError::Other(other_err.to_string()),
                };
                let mut model = fit_lexical(all, cfg.hash_size).map_err(config_err)?;
                if cfg.embed_dim > 0 {
                    model = model.with_projection(cfg.embed_dim).map_err(config_err)?;
                }
                Ok(PairEncoder::Lexical(model))
            }
            EncoderChoice::Precomputed(path) => {
                require_input(&path)?;
                let emb = load_precomputed(&path).map_err(other)?;
                Ok(PairEncoder::Precomputed(emb))
            }
        }
    }

    fn vectors(&self, pair: &DocumentSummaryPair) -> Result<PairVectors, StageError> {
        match self {
            PairEncoder::Lexical(model) => Ok(PairVectors {
                doc: pair
                    .transcript
                    .sentences
                    .iter()
                    .map(|s| model.encode(s))
                    .collect(),
                summary: pair.summary.bullets.iter().map(|s| model.encode(s)).collect(),
            }),
            PairEncoder::Precomputed(emb) => {
                let doc = pair
                    .transcript
                    .sentences
                    .iter()
                    .map(|s| {
                        emb.get(&doc_sentence_id(&pair.pair_id, s.index)).cloned()
                    })
                    .collect::<Result<_, _>>()
                    .map_err(other)?;
                let summary = pair
                    .summary
                    .bullets
                    .iter()
                    .map(|s| {
                        emb.get(&summary_sentence_id(&pair.pair_id, s.index)).cloned()
                    })
                    .collect::<Result<_, _>>()
                    .map_err(other)?;
                Ok(PairVectors { doc, summary })
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            PairEncoder::Lexical(model) => model.dim(),
            PairEncoder::Precomputed(emb) => emb.dim(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    pair_id: String,
    labels: String,
    alignments: Vec<Alignment>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParaphrasePairRecord {
    pair_id: String,
    masked_source: String,
    source_placeholders: Vec<(String, String)>,
    masked_target: String,
    target_placeholders: Vec<(String, String)>,
}

pub struct LabelsReport {
    pub pairs: usize,
    pub paraphrase_pairs: usize,
    pub containment_drops: usize,
}

pub fn labels_stage(
    pairs_path: &Path,
    out_labels: &Path,
    out_paraphrase: &Path,
    out_rewrite_training: Option<&Path>,
    cfg: &RunConfig,
) -> Result<LabelsReport, StageError> {
    let pairs = read_pairs(pairs_path)?;
    let encoder = PairEncoder::build(cfg, &pairs)?;

    let mut label_records = Vec::new();
    let mut all_paraphrase = Vec::new();
    let mut drops = 0usize;
    for pair in &pairs {
        let label_set = match &encoder {
            PairEncoder::Lexical(model) => build_labels(pair, model).map_err(other)?,
            PairEncoder::Precomputed(_) => {
                let vectors = encoder.vectors(pair)?;
                build_labels_with_vectors(pair, &vectors)?
            }
        };
        let (pp, dropped) = build_paraphrase_pairs(pair, &label_set);
        drops += dropped;
        label_records.push(LabelRecord {
            pair_id: pair.pair_id.clone(),
            labels: label_set
                .labels
                .iter()
                .map(|y| if *y == 1 { '1' } else { '0' })
                .collect(),
            alignments: label_set.alignments,
        });
        all_paraphrase.extend(pp);
    }

    write_records(out_labels, &cfg.header("labels"), &label_records)?;
    write_records(
        out_paraphrase,
        &cfg.header("paraphrase-pairs"),
        all_paraphrase.iter().map(|p| ParaphrasePairRecord {
            pair_id: p.pair_id.clone(),
            masked_source: p.source.masked_text.clone(),
            source_placeholders: p.source.placeholders.clone(),
            masked_target: p.target.masked_text.clone(),
            target_placeholders: p.target.placeholders.clone(),
        }),
    )?;
    if let Some(path) = out_rewrite_training {
        export_backend_training_set(&all_paraphrase, path).map_err(other)?;
    }
    Ok(LabelsReport {
        pairs: label_records.len(),
        paraphrase_pairs: all_paraphrase.len(),
        containment_drops: drops,
    })
}

/// Label construction against externally supplied vectors (the
/// precomputed-embedding path): numeric matching is unchanged, the
/// similarity fallback ranks the stored vectors.
fn build_labels_with_vectors(
    pair: &DocumentSummaryPair,
    vectors: &PairVectors,
) -> Result<callsum_core::labels::LabelSet, StageError> {
    use callsum_core::labels::{numeric_match, similarity_fallback, LabelSet, MatchKind};
    let doc = &pair.transcript.sentences;
    let mut labels = vec![0u8; doc.len()];
    let mut alignments = Vec::new();
    for target in &pair.summary.bullets {
        let numeric = numeric_match(target, doc);
        let alignment = if numeric.is_empty() {
            let chosen = similarity_fallback(&vectors.summary[target.index], &vectors.doc)
                .map_err(other)?;
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

pub fn read_labels(path: &Path) -> Result<BTreeMap<String, Vec<u8>>, StageError> {
    require_input(path)?;
    let (_, records): (_, Vec<LabelRecord>) = read_records(path, "labels")?;
    Ok(records
        .into_iter()
        .map(|r| {
            let labels = r
                .labels
                .chars()
                .map(|c| if c == '1' { 1u8 } else { 0u8 })
                .collect();
            (r.pair_id, labels)
        })
        .collect())
}

fn numeral_flags(sentences: &[Sentence]) -> Vec<bool> {
    sentences
        .iter()
        .map(|s| !callsum_core::text::extract_numerals(s).is_empty())
        .collect()
}

pub fn train_stage(
    pairs_path: &Path,
    labels_path: &Path,
    split_path: &Path,
    out_model: &Path,
    out_log: &Path,
    cfg: &RunConfig,
) -> Result<usize, StageError> {
    let pairs = read_pairs(pairs_path)?;
    let label_map = read_labels(labels_path)?;
    let split_map = read_split(split_path)?;
    let encoder = PairEncoder::build(cfg, &pairs)?;

    let mut train_set = Vec::new();
    let mut val_set = Vec::new();
    for pair in &pairs {
        let subset = split_map.get(&pair.pair_id).map(String::as_str);
        if !matches!(subset, Some("train") | Some("validation")) {
            continue;
        }
        let labels = label_map.get(&pair.pair_id).ok_or_else(|| {
            StageError::Other(format!("no labels for pair `{}`", pair.pair_id))
        })?;
        let vectors = encoder.vectors(pair)?;
        let example = TrainExample {
            doc: vectors.doc,
            has_numeral: numeral_flags(&pair.transcript.sentences),
            labels: labels.clone(),
        };
        match subset {
            Some("train") => train_set.push(example),
            _ => val_set.push(example),
        }
    }
    if train_set.is_empty() || val_set.is_empty() {
        return Err(StageError::Other(
            "train and validation splits must both be nonempty".to_string(),
        ));
    }

    let dims = Dims::new(encoder.dim());
    let train_cfg = TrainConfig {
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        max_epochs: cfg.epochs,
        early_stop_patience: if cfg.patience == 0 {
            None
        } else {
            Some(cfg.patience)
        },
        seed: cfg.seed,
        ..TrainConfig::default()
    };
    let initial = ExtractorParams::init(dims, cfg.seed);
    let (params, log) = train(&train_set, &val_set, initial, &train_cfg).map_err(other)?;
    save_checkpoint(&params, out_model).map_err(other)?;
    write_records(out_log, &cfg.header("train-log"), &log)?;
    Ok(log.len())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pair_id: String,
    pub sentence_indices: Vec<usize>,
    pub summary_text: String,
}

fn subset_pairs<'a>(
    pairs: &'a [DocumentSummaryPair],
    split_path: Option<&Path>,
    subset: &str,
) -> Result<Vec<&'a DocumentSummaryPair>, StageError> {
    match split_path {
        None => Ok(pairs.iter().collect()),
        Some(path) => {
            let split_map = read_split(path)?;
            Ok(pairs
                .iter()
                .filter(|p| split_map.get(&p.pair_id).map(String::as_str) == Some(subset))
                .collect())
        }
    }
}

pub fn summarize(
    pairs_path: &Path,
    model_path: &Path,
    split_path: Option<&Path>,
    subset: &str,
    out: &Path,
    cfg: &RunConfig,
) -> Result<usize, StageError> {
    let pairs = read_pairs(pairs_path)?;
    require_input(model_path)?;
    let params = load_checkpoint(model_path).map_err(other)?;
    let encoder = PairEncoder::build(cfg, &pairs)?;
    let chosen = subset_pairs(&pairs, split_path, subset)?;

    let mut records = Vec::new();
    for pair in chosen {
        let vectors = encoder.vectors(pair)?;
        let flags = numeral_flags(&pair.transcript.sentences);
        let (probs, _) = forward(&vectors.doc, &flags, &params).map_err(other)?;
        let indices = select(&probs, &pair.transcript.sentences, cfg.word_budget);
        let summary_text = indices
            .iter()
            .map(|&i| pair.transcript.sentences[i].text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        records.push(PredictionRecord {
            pair_id: pair.pair_id.clone(),
            sentence_indices: indices,
            summary_text,
        });
    }
    write_records(out, &cfg.header("predictions"), &records)?;
    Ok(records.len())
}

fn resolve_backend(cfg: &RunConfig) -> Result<Box<dyn RewriteBackend>, StageError> {
    if cfg.backend == "identity" {
        Ok(Box::new(IdentityBackend))
    } else if cfg.backend == "rules" {
        Ok(Box::new(RuleBackend::builtin().clone()))
    } else if let Some(cmd) = cfg.backend.strip_prefix("subprocess:") {
        SubprocessBackend::new(cmd)
            .map(|b| Box::new(b) as Box<dyn RewriteBackend>)
            .map_err(|e| StageError::Config(e.to_string()))
    } else {
        Err(StageError::Config(format!(
            "unknown backend `{}` (use `identity`, `rules`, or `subprocess:<cmd>`)",
            cfg.backend
        )))
    }
}

pub struct ParaphraseReport {
    pub predictions: usize,
    pub bullets: usize,
    pub value_losses: usize,
}

pub fn paraphrase_stage(
    pairs_path: &Path,
    predictions_path: &Path,
    out: &Path,
    cfg: &RunConfig,
) -> Result<ParaphraseReport, StageError> {
    let pairs = read_pairs(pairs_path)?;
    require_input(predictions_path)?;
    let (_, predictions): (_, Vec<PredictionRecord>) =
        read_records(predictions_path, "predictions")?;
    let backend = resolve_backend(cfg)?;
    let by_id: BTreeMap<&str, &DocumentSummaryPair> =
        pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();

    let mut records = Vec::new();
    let mut bullets = 0usize;
    let mut losses = 0usize;
    for prediction in &predictions {
        let pair = by_id.get(prediction.pair_id.as_str()).ok_or_else(|| {
            StageError::Other(format!(
                "prediction for unknown pair `{}`",
                prediction.pair_id
            ))
        })?;
        let mut texts = Vec::new();
        for &index in &prediction.sentence_indices {
            let sentence = pair.transcript.sentences.get(index).ok_or_else(|| {
                StageError::Other(format!(
                    "prediction for `{}` names sentence {index}, document has {}",
                    prediction.pair_id,
                    pair.transcript.sentences.len()
                ))
            })?;
            let outcome = paraphrase(sentence, backend.as_ref()).map_err(other)?;
            if let ParaphraseOutcome::ValueLoss { .. } = outcome {
                losses += 1;
            }
            bullets += 1;
            texts.push(outcome.bullet().text.clone());
        }
        records.push(PredictionRecord {
            pair_id: prediction.pair_id.clone(),
            sentence_indices: prediction.sentence_indices.clone(),
            summary_text: texts.join(" "),
        });
    }
    write_records(out, &cfg.header("predictions"), &records)?;
    Ok(ParaphraseReport {
        predictions: records.len(),
        bullets,
        value_losses: losses,
    })
}

pub fn baseline(
    pairs_path: &Path,
    method: &str,
    split_path: Option<&Path>,
    subset: &str,
    out: &Path,
    cfg: &RunConfig,
) -> Result<usize, StageError> {
    let pairs = read_pairs(pairs_path)?;
    let encoder = PairEncoder::build(cfg, &pairs)?;
    let chosen = subset_pairs(&pairs, split_path, subset)?;

    let mut records = Vec::new();
    for pair in chosen {
        let doc = &pair.transcript.sentences;
        let indices = match method {
            "lead" => baselines::lead(doc, cfg.word_budget),
            "lexrank" => {
                let vectors = encoder.vectors(pair)?;
                let scores = baselines::lexrank_scores(
                    &vectors.doc,
                    baselines::LEXRANK_THRESHOLD,
                    baselines::LEXRANK_DAMPING,
                );
                select(&scores, doc, cfg.word_budget)
            }
            "oracle" => {
                let vectors = encoder.vectors(pair)?;
                build_labels_with_vectors(pair, &vectors)?.positive_indices()
            }
            unknown => {
                return Err(StageError::Config(format!(
                    "unknown baseline `{unknown}` (use lexrank, lead, or oracle)"
                )))
            }
        };
        let summary_text = indices
            .iter()
            .map(|&i| doc[i].text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        records.push(PredictionRecord {
            pair_id: pair.pair_id.clone(),
            sentence_indices: indices,
            summary_text,
        });
    }
    write_records(out, &cfg.header("predictions"), &records)?;
    Ok(records.len())
}

pub fn evaluate_stage(
    pairs_path: &Path,
    predictions_path: &Path,
    split_path: Option<&Path>,
    subset: &str,
    out: &Path,
    table_out: Option<&Path>,
    cfg: &RunConfig,
) -> Result<MetricsReport, StageError> {
    let pairs = read_pairs(pairs_path)?;
    require_input(predictions_path)?;
    let (_, predictions): (_, Vec<PredictionRecord>) =
        read_records(predictions_path, "predictions")?;
    let chosen = subset_pairs(&pairs, split_path, subset)?;
    let owned: Vec<DocumentSummaryPair> = chosen.into_iter().cloned().collect();

    let by_id: BTreeMap<String, String> = predictions
        .into_iter()
        .map(|p| (p.pair_id, p.summary_text))
        .collect();
    let report = evaluate(&by_id, &owned);

    // one summary record first, then one record per document
    let mut lines: Vec<serde_json::Value> = Vec::new();
    let mut summary_only = report.clone();
    summary_only.per_document.clear();
    lines.push(serde_json::to_value(&summary_only).map_err(other)?);
    for doc in &report.per_document {
        lines.push(serde_json::to_value(doc).map_err(other)?);
    }
    write_records(out, &cfg.header("report"), &lines)?;
    let table = report.render_table();
    if let Some(path) = table_out {
        std::fs::write(path, &table).map_err(other)?;
    }
    Ok(report)
}

/// Fixed artifact names inside a pipeline working directory.
pub struct Workdir {
    pub root: PathBuf,
}

impl Workdir {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

pub struct PipelineSummary {
    pub pairs: usize,
    pub report: MetricsReport,
}

/// Run every stage end to end against a working directory.
pub fn pipeline(
    raw_transcripts: &Path,
    raw_articles: &Path,
    workdir: &Path,
    cfg: &RunConfig,
) -> Result<PipelineSummary, StageError> {
    std::fs::create_dir_all(workdir).map_err(other)?;
    let w = Workdir::new(workdir);
    ingest(
        raw_transcripts,
        raw_articles,
        &w.path("cleaned_transcripts.jsonl"),
        &w.path("cleaned_articles.jsonl"),
        cfg,
    )?;
    let n_pairs = pair(
        &w.path("cleaned_transcripts.jsonl"),
        &w.path("cleaned_articles.jsonl"),
        &w.path("pairs.jsonl"),
        cfg,
    )?;
    split(&w.path("pairs.jsonl"), &w.path("split.jsonl"), cfg)?;
    stats(
        &w.path("pairs.jsonl"),
        &w.path("stats.jsonl"),
        Some(&w.path("stats.txt")),
        cfg,
    )?;
    labels_stage(
        &w.path("pairs.jsonl"),
        &w.path("labels.jsonl"),
        &w.path("paraphrase_pairs.jsonl"),
        Some(&w.path("rewrite_training.jsonl")),
        cfg,
    )?;
    train_stage(
        &w.path("pairs.jsonl"),
        &w.path("labels.jsonl"),
        &w.path("split.jsonl"),
        &w.path("model.ckpt"),
        &w.path("train_log.jsonl"),
        cfg,
    )?;
    summarize(
        &w.path("pairs.jsonl"),
        &w.path("model.ckpt"),
        Some(&w.path("split.jsonl")),
        "test",
        &w.path("extractive_predictions.jsonl"),
        cfg,
    )?;
    paraphrase_stage(
        &w.path("pairs.jsonl"),
        &w.path("extractive_predictions.jsonl"),
        &w.path("predictions.jsonl"),
        cfg,
    )?;
    let report = evaluate_stage(
        &w.path("pairs.jsonl"),
        &w.path("predictions.jsonl"),
        Some(&w.path("split.jsonl")),
        "test",
        &w.path("report.jsonl"),
        Some(&w.path("report.txt")),
        cfg,
    )?;
    Ok(PipelineSummary {
        pairs: n_pairs,
        report,
    })
}
