//! Sentence embeddings behind one small interface.
//!
//! The built-in provider is a hashed tf-idf model: fast to fit, fully
//! deterministic, and good enough to rank lexical similarity at desk scale.
//! Externally computed vectors (from any pretrained encoder) plug in through
//! a file of `sentence_id -> vector` records, either line-delimited JSON or
//! a compact binary layout.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::Sentence;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("hash size {0} too small, need at least 64 buckets")]
    ConfigError(usize),
    #[error("cannot fit a lexical model on an empty corpus")]
    EmptyCorpus,
    #[error("no embedding stored for sentence id `{0}`")]
    MissingEmbedding(String),
    #[error("embedding file {path}: {reason}")]
    FormatError { path: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A dense sentence vector with its Euclidean norm cached at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceVec {
    pub values: Vec<f64>,
    pub norm: f64,
}

impl SentenceVec {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { values, norm }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Cosine similarity; `None` when either vector is zero.
    pub fn cosine(&self, other: &Self) -> Option<f64> {
        if self.is_zero() || other.is_zero() {
            None
        } else {
            Some(self.dot(other) / (self.norm * other.norm))
        }
    }
}

pub trait SentenceEncoder: Sync {
    fn dim(&self) -> usize;
    fn encode(&self, sentence: &Sentence) -> SentenceVec;
}

/// Seedless FNV-1a, the fixed token-to-bucket hash. Changing this would
/// silently invalidate every stored model, so it never takes a seed.
fn token_bucket(token: &str, hash_size: usize) -> usize {
    (crate::records::fnv1a64(token.as_bytes()) % hash_size as u64) as usize
}

/// Hashed tf-idf model fitted over a sentence corpus. Each sentence counts
/// as one document for the idf statistics. An optional signed hash
/// projection folds the bucket space down to a smaller dense dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalModel {
    pub hash_size: usize,
    pub idf: Vec<f64>,
    pub corpus_doc_count: usize,
    #[serde(default)]
    pub projection_dim: Option<usize>,
}

pub fn fit_lexical<'a>(
    sentences: impl IntoIterator<Item = &'a Sentence>,
    hash_size: usize,
) -> Result<LexicalModel, EncoderError> {
    if hash_size < 64 {
        return Err(EncoderError::ConfigError(hash_size));
    }
    let mut doc_freq = vec![0usize; hash_size];
    let mut corpus_doc_count = 0usize;
    let mut seen = Vec::new();
    for sentence in sentences {
        corpus_doc_count += 1;
        seen.clear();
        for token in &sentence.tokens {
            let bucket = token_bucket(token, hash_size);
            if !seen.contains(&bucket) {
                seen.push(bucket);
                doc_freq[bucket] += 1;
            }
        }
    }
    if corpus_doc_count == 0 {
        return Err(EncoderError::EmptyCorpus);
    }
    let idf = doc_freq
        .iter()
        .map(|&df| (1.0 + corpus_doc_count as f64 / (1.0 + df as f64)).ln())
        .collect();
    Ok(LexicalModel {
        hash_size,
        idf,
        corpus_doc_count,
        projection_dim: None,
    })
}

impl LexicalModel {
    /// Stable serialized form; refitting on the same corpus reproduces the
    /// same bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn bucket_of(&self, token: &str) -> usize {
        token_bucket(token, self.hash_size)
    }

    /// Project bucket weights down to `dim` coordinates with a fixed
    /// signed hash. Requires `dim >= 64`, like the bucket space itself.
    pub fn with_projection(mut self, dim: usize) -> Result<Self, EncoderError> {
        if dim < 64 {
            return Err(EncoderError::ConfigError(dim));
        }
        self.projection_dim = Some(dim);
        Ok(self)
    }

    /// Target coordinate and sign for a bucket under the projection.
    fn project(bucket: usize, dim: usize) -> (usize, f64) {
        let mixed = crate::records::fnv1a64(&(bucket as u64).to_le_bytes());
        let coord = (mixed % dim as u64) as usize;
        let sign = if mixed & (1 << 63) == 0 { 1.0 } else { -1.0 };
        (coord, sign)
    }
}

impl SentenceEncoder for LexicalModel {
    fn dim(&self) -> usize {
        self.projection_dim.unwrap_or(self.hash_size)
    }

    fn encode(&self, sentence: &Sentence) -> SentenceVec {
        let mut values = vec![0.0; self.dim()];
        for token in &sentence.tokens {
            let bucket = token_bucket(token, self.hash_size);
            match self.projection_dim {
                None => values[bucket] += self.idf[bucket],
                Some(dim) => {
                    let (coord, sign) = Self::project(bucket, dim);
                    values[coord] += sign * self.idf[bucket];
                }
            }
        }
        let mut vec = SentenceVec::new(values);
        if vec.norm > 0.0 {
            let norm = vec.norm;
            for v in &mut vec.values {
                *v /= norm;
            }
            vec.norm = 1.0;
        }
        vec
    }
}

const BINARY_MAGIC: &[u8; 8] = b"EMBV0001";

/// Embeddings computed outside the pipeline, keyed by exact sentence id.
#[derive(Debug, Clone)]
pub struct PrecomputedEmbeddings {
    dim: usize,
    by_id: HashMap<String, SentenceVec>,
}

impl PrecomputedEmbeddings {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn get(&self, sentence_id: &str) -> Result<&SentenceVec, EncoderError> {
        self.by_id
            .get(sentence_id)
            .ok_or_else(|| EncoderError::MissingEmbedding(sentence_id.to_string()))
    }
}

#[derive(Deserialize)]
struct EmbeddingRecord {
    sentence_id: String,
    values: Vec<f32>,
}

/// Load an embedding file, auto-detecting the binary layout by its magic
/// header and falling back to line-delimited JSON otherwise.
pub fn load_precomputed(path: &Path) -> Result<PrecomputedEmbeddings, EncoderError> {
    let display = path.display().to_string();
    let io = |source| EncoderError::Io {
        path: display.clone(),
        source,
    };
    let format = |reason: String| EncoderError::FormatError {
        path: display.clone(),
        reason,
    };
    let mut file = File::open(path).map_err(io)?;
    let mut magic = [0u8; 8];
    let read = read_up_to(&mut file, &mut magic).map_err(io)?;
    let mut entries: Vec<(String, Vec<f32>)> = Vec::new();
    if read == 8 && &magic == BINARY_MAGIC {
        let mut rest = Vec::new();
        file.read_to_end(&mut rest).map_err(io)?;
        entries = parse_binary(&rest).map_err(format)?;
    } else {
        let file = File::open(path).map_err(io)?;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let record: EmbeddingRecord = serde_json::from_str(&line)
                .map_err(|e| format(format!("line {}: {e}", lineno + 1)))?;
            entries.push((record.sentence_id, record.values));
        }
    }
    let dim = match entries.first() {
        Some((_, values)) => values.len(),
        None => return Err(format("file holds no embeddings".to_string())),
    };
    let mut by_id = HashMap::with_capacity(entries.len());
    for (id, values) in entries {
        if values.len() != dim {
            return Err(format(format!(
                "ragged dimensions: `{id}` has {} values, expected {dim}",
                values.len()
            )));
        }
        let vec = SentenceVec::new(values.into_iter().map(f64::from).collect());
        if by_id.insert(id.clone(), vec).is_some() {
            return Err(format(format!("duplicate sentence id `{id}`")));
        }
    }
    Ok(PrecomputedEmbeddings { dim, by_id })
}

fn read_up_to(file: &mut File, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = file.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<(String, Vec<f32>)>, String> {
    let mut cursor = 0usize;
    let mut take = |n: usize| -> Result<&[u8], String> {
        if cursor + n > bytes.len() {
            return Err("truncated binary embedding file".to_string());
        }
        let slice = &bytes[cursor..cursor + n];
        cursor += n;
        Ok(slice)
    };
    let dim = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let id_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let id = String::from_utf8(take(id_len)?.to_vec())
            .map_err(|_| "sentence id is not UTF-8".to_string())?;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            values.push(f32::from_le_bytes(take(4)?.try_into().unwrap()));
        }
        entries.push((id, values));
    }
    Ok(entries)
}

/// Write embeddings in the binary layout: magic, u32 dimension, u64 count,
/// then per record a u32 id length, the UTF-8 id, and `dim` f32 values,
/// all little-endian.
pub fn write_precomputed_binary(
    path: &Path,
    dim: usize,
    entries: &[(String, Vec<f32>)],
) -> Result<(), EncoderError> {
    use std::io::Write;
    let display = path.display().to_string();
    let io = |source| EncoderError::Io {
        path: display.clone(),
        source,
    };
    let mut out = Vec::new();
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for (id, values) in entries {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    File::create(path).map_err(io)?.write_all(&out).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(text: &str) -> Sentence {
        Sentence::new(text, 0)
    }

    fn tiny_corpus() -> Vec<Sentence> {
        vec![
            sentence("revenue rose sharply this quarter."),
            sentence("margins fell this quarter."),
            sentence("revenue and margins this quarter."),
        ]
    }

    #[test]
    fn idf_monotone_in_document_frequency() {
        let corpus = tiny_corpus();
        let model = fit_lexical(&corpus, 256).unwrap();
        // "quarter" occurs in every sentence, "rose" in exactly one.
        let everywhere = model.idf[model.bucket_of("quarter")];
        let once = model.idf[model.bucket_of("rose")];
        assert!(once > everywhere);
        let n = model.corpus_doc_count as f64;
        assert!((once - (1.0 + n / 2.0).ln()).abs() < 1e-12);
        assert!((everywhere - (1.0 + n / (1.0 + n)).ln()).abs() < 1e-12);
    }

    #[test]
    fn refit_is_bit_stable() {
        let corpus = tiny_corpus();
        let a = fit_lexical(&corpus, 128).unwrap();
        let b = fit_lexical(&corpus, 128).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn hash_size_below_64_is_rejected() {
        let corpus = tiny_corpus();
        assert!(matches!(
            fit_lexical(&corpus, 63),
            Err(EncoderError::ConfigError(63))
        ));
    }

    #[test]
    fn empty_sentence_encodes_to_zero() {
        let corpus = tiny_corpus();
        let model = fit_lexical(&corpus, 128).unwrap();
        let v = model.encode(&sentence(""));
        assert!(v.is_zero());
        assert!(v.values.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn self_cosine_is_one() {
        let corpus = tiny_corpus();
        let model = fit_lexical(&corpus, 128).unwrap();
        let v = model.encode(&corpus[0]);
        assert!((v.cosine(&v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_vocabulary_cosine_zero_without_collisions() {
        let a = sentence("alpha beta gamma");
        let b = sentence("delta epsilon zeta");
        let model = fit_lexical([&a, &b], 1 << 16).unwrap();
        // Verify collision freedom directly at the bucket level.
        let buckets: Vec<usize> = a
            .tokens
            .iter()
            .chain(&b.tokens)
            .map(|t| model.bucket_of(t))
            .collect();
        let mut unique = buckets.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), buckets.len());
        let cos = model.encode(&a).cosine(&model.encode(&b)).unwrap();
        assert_eq!(cos, 0.0);
    }

    #[test]
    fn norm_matches_recomputed_norm() {
        let corpus = tiny_corpus();
        let model = fit_lexical(&corpus, 128).unwrap();
        for s in &corpus {
            let v = model.encode(s);
            let recomputed = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((v.norm - recomputed).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_shrinks_dimension_deterministically() {
        let corpus = tiny_corpus();
        let wide = fit_lexical(&corpus, 1 << 12).unwrap();
        let narrow = wide.clone().with_projection(128).unwrap();
        assert_eq!(narrow.dim(), 128);
        let a = narrow.encode(&corpus[0]);
        let b = narrow.encode(&corpus[0]);
        assert_eq!(a, b);
        assert_eq!(a.dim(), 128);
        assert!((a.cosine(&a).unwrap() - 1.0).abs() < 1e-12);
        // identical sentences stay identical under projection; distinct
        // sentences keep a sensible similarity ordering
        let same = narrow.encode(&Sentence::new(corpus[0].text.clone(), 9));
        assert!((a.cosine(&same).unwrap() - 1.0).abs() < 1e-12);
        assert!(narrow.clone().with_projection(32).is_err());
    }

    fn temp_path(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("callsum-encoder-test");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn precomputed_jsonl_round_trip() {
        let path = temp_path("emb.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"sentence_id\":\"a\",\"values\":[1.0,0.0]}\n",
                "{\"sentence_id\":\"b\",\"values\":[0.0,2.0]}\n",
                "{\"sentence_id\":\"c\",\"values\":[1.0,1.0]}\n",
            ),
        )
        .unwrap();
        let emb = load_precomputed(&path).unwrap();
        assert_eq!(emb.dim(), 2);
        assert_eq!(emb.get("a").unwrap().values, vec![1.0, 0.0]);
        assert!(matches!(
            emb.get("zzz"),
            Err(EncoderError::MissingEmbedding(_))
        ));
    }

    #[test]
    fn ragged_dimensions_rejected() {
        let path = temp_path("ragged.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"sentence_id\":\"a\",\"values\":[1.0,0.0,0.5]}\n",
                "{\"sentence_id\":\"b\",\"values\":[0.0,2.0,0.5]}\n",
                "{\"sentence_id\":\"c\",\"values\":[1.0,1.0]}\n",
            ),
        )
        .unwrap();
        assert!(matches!(
            load_precomputed(&path),
            Err(EncoderError::FormatError { .. })
        ));
    }

    #[test]
    fn binary_round_trip() {
        let path = temp_path("emb.bin");
        let entries = vec![
            ("x".to_string(), vec![0.25f32, -1.5]),
            ("y".to_string(), vec![3.0f32, 4.0]),
        ];
        write_precomputed_binary(&path, 2, &entries).unwrap();
        let emb = load_precomputed(&path).unwrap();
        assert_eq!(emb.dim(), 2);
        assert_eq!(emb.get("x").unwrap().values, vec![0.25, -1.5]);
        assert_eq!(emb.get("y").unwrap().norm, 5.0);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let path = temp_path("dup.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"sentence_id\":\"a\",\"values\":[1.0]}\n",
                "{\"sentence_id\":\"a\",\"values\":[2.0]}\n",
            ),
        )
        .unwrap();
        assert!(matches!(
            load_precomputed(&path),
            Err(EncoderError::FormatError { .. })
        ));
    }
}
