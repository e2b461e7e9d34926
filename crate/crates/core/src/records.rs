//! Line-delimited record files. Every stage artifact starts with a one-line
//! header carrying the format name, format version, and the hash of the
//! config that produced it, followed by one JSON record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {source}")]
    Malformed {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{path}: missing header line")]
    MissingHeader { path: String },
    #[error("{path}: expected format `{expected}`, found `{found}`")]
    WrongFormat {
        path: String,
        expected: String,
        found: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    /// The full producing configuration, for provenance. Serialized with
    /// sorted keys, so identical configs give identical header bytes.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl Header {
    pub fn new(format: &str, config_hash: &str) -> Self {
        Self {
            format: format.to_string(),
            version: 1,
            config_hash: config_hash.to_string(),
            config: serde_json::Value::Null,
        }
    }

    pub fn with_config(format: &str, config_hash: &str, config: serde_json::Value) -> Self {
        Self {
            format: format.to_string(),
            version: 1,
            config_hash: config_hash.to_string(),
            config,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> RecordError {
    RecordError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_records<T: Serialize>(
    path: &Path,
    header: &Header,
    records: impl IntoIterator<Item = T>,
) -> Result<usize, RecordError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let header_line = serde_json::to_string(header).expect("header serializes");
    writeln!(out, "{header_line}").map_err(|e| io_err(path, e))?;
    let mut count = 0;
    for record in records {
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
        count += 1;
    }
    out.flush().map_err(|e| io_err(path, e))?;
    Ok(count)
}

pub fn read_records<T: DeserializeOwned>(
    path: &Path,
    expected_format: &str,
) -> Result<(Header, Vec<T>), RecordError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| RecordError::MissingHeader {
        path: path.display().to_string(),
    })?;
    let first = first.map_err(|e| io_err(path, e))?;
    let header: Header =
        serde_json::from_str(&first).map_err(|source| RecordError::Malformed {
            path: path.display().to_string(),
            line: 1,
            source,
        })?;
    if header.format != expected_format {
        return Err(RecordError::WrongFormat {
            path: path.display().to_string(),
            expected: expected_format.to_string(),
            found: header.format,
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|source| RecordError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                source,
            })?,
        );
    }
    Ok((header, records))
}

/// FNV-1a over a byte string; the pipeline hashes the canonical config JSON
/// with this to stamp artifact headers.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
