//! Effective run configuration. Every stage stamps the hash of its
//! serialized config into its output header, so artifacts record what
//! produced them and reruns with the same config are byte-comparable.
//! Thread count is deliberately not part of the config: results must not
//! depend on it.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    /// `lexical` or `precomputed:<path>`.
    pub encoder: String,
    pub hash_size: usize,
    /// Optional projection of the lexical encoder down to this dimension
    /// (0 = no projection).
    pub embed_dim: usize,
    pub word_budget: usize,
    pub max_merge: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    /// `identity`, `rules`, or `subprocess:<command line>`.
    pub backend: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            encoder: "lexical".to_string(),
            hash_size: 1024,
            embed_dim: 0,
            word_budget: 50,
            max_merge: 0,
            learning_rate: 1e-5,
            batch_size: 8,
            epochs: 50,
            patience: 0,
            backend: "rules".to_string(),
        }
    }
}

impl RunConfig {
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!(
            "{:016x}",
            callsum_core::records::fnv1a64(canonical.as_bytes())
        )
    }

    /// Header for a stage artifact, carrying both the config hash and the
    /// full config for provenance.
    pub fn header(&self, format: &str) -> callsum_core::records::Header {
        callsum_core::records::Header::with_config(
            format,
            &self.hash(),
            serde_json::to_value(self).expect("config serializes"),
        )
    }
}
