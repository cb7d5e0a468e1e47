//! Cell similarity measures and row scores.
//!
//! A measure compares one facet of a cell pair — text content or bounding
//! box — and returns a score in `[0, 1]`. Runs score exactly one facet at a
//! time so that content recognition and location recognition are always
//! measured separately.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cell, LineItem};
use crate::text::{normalize_text, normalized_edit_similarity};

/// The facet of a cell a run scores: extracted text or box coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    Content,
    Location,
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Facet::Content => write!(f, "content"),
            Facet::Location => write!(f, "location"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("cell has no text value required by measure {0:?}")]
    MissingValue(String),
    #[error("cell has no bbox required by measure {0:?}")]
    MissingBBox(String),
}

/// A user-supplied similarity measure. Implementations must return scores
/// in `[0, 1]` for every input pair and be symmetric in their arguments.
pub trait CustomMeasure: Send + Sync {
    fn name(&self) -> &str;
    fn facet(&self) -> Facet;
    fn score(&self, pred: &Cell, truth: &Cell) -> Result<f64, SimilarityError>;
}

/// Built-in cell similarity measures plus an extension point.
///
/// Text measures compare normalized values by default; construct with
/// `normalize: false` for strict byte-wise comparison.
#[derive(Clone)]
pub enum SimilarityMeasure {
    /// 1.0 iff the (normalized) values are equal, else 0.0.
    ExactMatch { normalize: bool },
    /// `1 - editdist(a, b) / max(|a|, |b|)`; 1.0 when both values are empty.
    NormalizedEdit { normalize: bool },
    /// Intersection-over-union of the two bounding boxes.
    BBoxIoU,
    Custom(Arc<dyn CustomMeasure>),
}

impl SimilarityMeasure {
    pub fn exact() -> Self {
        SimilarityMeasure::ExactMatch { normalize: true }
    }

    pub fn edit() -> Self {
        SimilarityMeasure::NormalizedEdit { normalize: true }
    }

    pub fn iou() -> Self {
        SimilarityMeasure::BBoxIoU
    }

    pub fn name(&self) -> &str {
        match self {
            SimilarityMeasure::ExactMatch { .. } => "exact",
            SimilarityMeasure::NormalizedEdit { .. } => "edit",
            SimilarityMeasure::BBoxIoU => "iou",
            SimilarityMeasure::Custom(m) => m.name(),
        }
    }

    /// The facet this measure reads.
    pub fn facet(&self) -> Facet {
        match self {
            SimilarityMeasure::ExactMatch { .. } | SimilarityMeasure::NormalizedEdit { .. } => {
                Facet::Content
            }
            SimilarityMeasure::BBoxIoU => Facet::Location,
            SimilarityMeasure::Custom(m) => m.facet(),
        }
    }

    /// Turns text normalization on or off; no effect on non-text measures.
    pub fn with_normalization(self, normalize: bool) -> Self {
        match self {
            SimilarityMeasure::ExactMatch { .. } => SimilarityMeasure::ExactMatch { normalize },
            SimilarityMeasure::NormalizedEdit { .. } => {
                SimilarityMeasure::NormalizedEdit { normalize }
            }
            other => other,
        }
    }
}

impl fmt::Debug for SimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityMeasure::ExactMatch { normalize } => {
                write!(f, "ExactMatch {{ normalize: {normalize} }}")
            }
            SimilarityMeasure::NormalizedEdit { normalize } => {
                write!(f, "NormalizedEdit {{ normalize: {normalize} }}")
            }
            SimilarityMeasure::BBoxIoU => write!(f, "BBoxIoU"),
            SimilarityMeasure::Custom(m) => write!(f, "Custom({})", m.name()),
        }
    }
}

impl FromStr for SimilarityMeasure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SimilarityMeasure::exact()),
            "edit" => Ok(SimilarityMeasure::edit()),
            "iou" => Ok(SimilarityMeasure::iou()),
            other => Err(format!(
                "unknown measure {other:?} (expected: exact, edit, iou)"
            )),
        }
    }
}

/// Scores a predicted cell against a ground-truth cell.
///
/// Returns `MissingValue` / `MissingBBox` when a cell lacks the facet the
/// measure reads; metric code maps that to a score of zero.
pub fn eval_similarity(
    measure: &SimilarityMeasure,
    pred: &Cell,
    truth: &Cell,
) -> Result<f64, SimilarityError> {
    match measure {
        SimilarityMeasure::ExactMatch { normalize } => {
            let (a, b) = text_pair(measure, pred, truth, *normalize)?;
            Ok(if a == b { 1.0 } else { 0.0 })
        }
        SimilarityMeasure::NormalizedEdit { normalize } => {
            let (a, b) = text_pair(measure, pred, truth, *normalize)?;
            Ok(normalized_edit_similarity(&a, &b))
        }
        SimilarityMeasure::BBoxIoU => {
            let missing = || SimilarityError::MissingBBox("iou".into());
            let a = pred.bbox.as_ref().ok_or_else(missing)?;
            let b = truth.bbox.as_ref().ok_or_else(missing)?;
            Ok(a.iou(b))
        }
        SimilarityMeasure::Custom(m) => {
            let score = m.score(pred, truth)?;
            debug_assert!((0.0..=1.0).contains(&score), "custom measure out of range");
            Ok(score)
        }
    }
}

fn text_pair(
    measure: &SimilarityMeasure,
    pred: &Cell,
    truth: &Cell,
    normalize: bool,
) -> Result<(String, String), SimilarityError> {
    let missing = || SimilarityError::MissingValue(measure.name().to_string());
    let a = pred.value.as_ref().ok_or_else(missing)?;
    let b = truth.value.as_ref().ok_or_else(missing)?;
    if normalize {
        Ok((normalize_text(a), normalize_text(b)))
    } else {
        Ok((a.clone(), b.clone()))
    }
}

/// Row score: the sum of cell similarities over column keys present in both
/// rows. Keys present in only one row contribute nothing here (metric
/// denominators penalize them), and cells lacking the measured facet score
/// zero. The result is at most `min(|row_p|, |row_t|)`.
pub fn row_score(measure: &SimilarityMeasure, row_p: &LineItem, row_t: &LineItem) -> f64 {
    let mut total = 0.0;
    for (key, pred_cell) in &row_p.cells {
        if let Some(truth_cell) = row_t.cells.get(key) {
            total += eval_similarity(measure, pred_cell, truth_cell).unwrap_or(0.0);
        }
    }
    total
}
