//! Corpus manifest files: one JSON object per line naming a document id
//! and its prediction / ground-truth (and optionally OCR) files. An
//! explicit manifest keeps runs reproducible and testable, unlike
//! directory scanning.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
}

/// One document to evaluate. Paths are resolved relative to the manifest's
/// own directory by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub pred: PathBuf,
    pub gt: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ocr: Option<PathBuf>,
}

/// Parses a JSON-lines manifest; blank lines are skipped and ids must be
/// unique.
pub fn parse_manifest(bytes: &[u8]) -> Result<Vec<ManifestEntry>, ManifestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ManifestError::Malformed {
        line: 0,
        message: e.to_string(),
    })?;
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| ManifestError::Malformed {
                line: idx + 1,
                message: e.to_string(),
            })?;
        if entries.iter().any(|e| e.id == entry.id) {
            return Err(ManifestError::DuplicateId(entry.id));
        }
        entries.push(entry);
    }
    Ok(entries)
}
