//! Evaluation toolkit for business document information extraction (BDIE).
//!
//! The crate covers the measurement side of a document-extraction pipeline:
//!
//! - [`model`] — OCR documents, extraction records (key-value and line-item
//!   tables), JSON parsing and serialization.
//! - [`similarity`] — cell similarity measures (exact match, normalized edit
//!   distance, bounding-box IoU) and row scores.
//! - [`align`] — order-preserving row alignment between predicted and
//!   ground-truth line-item tables, plus a maximum-weight bipartite matcher
//!   for contrast.
//! - [`metrics`] — GLIRM precision/recall/F1/Fβ, key-information-extraction
//!   F1, and the information coverage score.
//! - [`backcalc`] — greedy bounding-box backcalculation from OCR words and
//!   the vertical page-partitioning dynamic program for line items.
//! - [`retrieval`] — wavelet hashing of page images and Manhattan-distance
//!   nearest-neighbor lookup.
//! - [`prompt`] — layout-preserving serialization of an OCR page into a
//!   monospace text prompt.
//! - [`schema`] — structured-output schema linting and the dummy-key
//!   workaround for all-optional schemas.
//! - [`report`] — per-document report records, corpus aggregates, and
//!   JSON/CSV/ablation-table emitters.
//! - [`manifest`] — corpus manifest files listing documents to evaluate.

pub mod align;
pub mod backcalc;
pub mod geometry;
pub mod ingest;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod prompt;
pub mod report;
pub mod retrieval;
pub mod schema;
pub mod similarity;
pub mod text;

pub use align::{align_rows, bipartite_match, AlignmentResult, RowMatching};
pub use backcalc::{
    backcalc_band, backcalc_kie, partition_line_items, partition_with_stats, tighten_bounds,
    BackcalcError, BackcalcResult, KvMap, Partition, PartitionStats, PartitionStrategy,
};
pub use geometry::BBox;
pub use metrics::{glirm, ics, kie_f1, GlirmReport, KieReport, MetricsError, Normalization};
pub use model::{
    detect_extraction_kind, parse_extraction, parse_ocr_document, Cell, Extraction,
    ExtractionKind, KieExtraction, LineItem, LineItemTable, OcrDocument, OcrPage, OcrWord,
    ParseError,
};
pub use prompt::{build_layout_prompt, default_char_cell_px, LayoutPrompt};
pub use retrieval::{
    decode_image, manhattan_distance, retrieve_nearest, wavelet_hash, wavelet_hash_with,
    HashConfig, RetrievalError, RetrievalIndex, WaveletHash,
};
pub use schema::{
    apply_dummy_key_workaround, lint_schema, lint_schema_bytes, strip_dummy_key, LintCode,
    SchemaError, SchemaLintFinding,
};
pub use similarity::{eval_similarity, row_score, CustomMeasure, Facet, SimilarityError, SimilarityMeasure};
pub use text::normalize_text;
