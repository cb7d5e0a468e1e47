//! Task implementations behind the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use glirm::align::align_rows;
use glirm::backcalc::{backcalc_kie, partition_line_items, tighten_bounds};
use glirm::manifest::{parse_manifest, ManifestEntry};
use glirm::metrics::{glirm, kie_f1};
use glirm::model::{
    detect_extraction_kind, parse_extraction, parse_ocr_document, Extraction, ExtractionKind,
    KieExtraction, LineItemTable, OcrPage,
};
use glirm::report::{CorpusReport, DocumentRecord};
use glirm::retrieval::{
    decode_image, retrieve_nearest, wavelet_hash_with, HashConfig, RetrievalIndex,
};
use glirm::schema::{lint_schema_bytes, SchemaLintFinding};
use glirm::similarity::{Facet, SimilarityMeasure};
use glirm::{build_layout_prompt, default_char_cell_px};

use crate::config::RunConfig;

/// Failures split by exit code: input problems exit 2, internal problems 3.
#[derive(Debug)]
pub enum CliError {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Input(e) | CliError::Internal(e) => format!("{e:#}"),
        }
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Input(e.into())
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)
}

// ---------------------------------------------------------------------------
// Corpus evaluation
// ---------------------------------------------------------------------------

fn resolve_measure(cfg: &RunConfig, kind: ExtractionKind) -> Result<SimilarityMeasure, CliError> {
    let name = match &cfg.measure {
        Some(name) => name.as_str(),
        None => match kind {
            ExtractionKind::Kie => "exact",
            ExtractionKind::Lir => "edit",
        },
    };
    let measure: SimilarityMeasure = name.parse().map_err(|e: String| input(anyhow!(e)))?;
    Ok(measure.with_normalization(cfg.normalize_text))
}

fn resolve_facet(cfg: &RunConfig, measure: &SimilarityMeasure) -> Result<Facet, CliError> {
    match cfg.facet {
        None => Ok(measure.facet()),
        Some(facet) if facet == measure.facet() => Ok(facet),
        Some(facet) => Err(input(anyhow!(
            "facet {facet} does not match measure {:?}: a run scores one facet only",
            measure.name()
        ))),
    }
}

/// Evaluates every manifest document and aggregates a corpus report.
/// Per-document failures become report records unless `strict` is set.
pub fn eval_corpus(
    kind: ExtractionKind,
    manifest_path: &Path,
    cfg: &RunConfig,
) -> Result<CorpusReport, CliError> {
    let entries = parse_manifest(&read_file(manifest_path)?).map_err(input)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let measure = resolve_measure(cfg, kind)?;
    let facet = resolve_facet(cfg, &measure)?;
    if cfg.beta.is_nan() || cfg.beta <= 0.0 || !cfg.beta.is_finite() {
        return Err(input(anyhow!("beta must be positive, got {}", cfg.beta)));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Internal(e.into()))?;
    let records: Vec<DocumentRecord> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| eval_document(kind, base, entry, cfg, &measure, facet))
            .collect()
    });

    if cfg.strict {
        if let Some(failed) = records.iter().find(|r| r.error.is_some()) {
            return Err(input(anyhow!(
                "document {}: {}",
                failed.id,
                failed.error.as_deref().unwrap_or("unknown failure")
            )));
        }
    }
    Ok(CorpusReport::build(cfg.echo(), records))
}

fn eval_document(
    kind: ExtractionKind,
    base: &Path,
    entry: &ManifestEntry,
    cfg: &RunConfig,
    measure: &SimilarityMeasure,
    facet: Facet,
) -> DocumentRecord {
    let mut record = DocumentRecord {
        id: entry.id.clone(),
        glirm: None,
        kie: None,
        alignment: None,
        error: None,
    };
    match eval_pair(kind, base, entry, cfg, measure, facet) {
        Ok((glirm_report, kie_report, alignment)) => {
            record.glirm = glirm_report;
            record.kie = kie_report;
            record.alignment = alignment;
        }
        Err(e) => record.error = Some(e.message()),
    }
    record
}

type DocScores = (
    Option<glirm::GlirmReport>,
    Option<glirm::KieReport>,
    Option<glirm::AlignmentResult>,
);

fn eval_pair(
    kind: ExtractionKind,
    base: &Path,
    entry: &ManifestEntry,
    cfg: &RunConfig,
    measure: &SimilarityMeasure,
    facet: Facet,
) -> Result<DocScores, CliError> {
    let pred_bytes = read_file(&base.join(&entry.pred))?;
    let gt_bytes = read_file(&base.join(&entry.gt))?;
    let pred = parse_extraction(&pred_bytes, kind).map_err(input)?;
    let truth = parse_extraction(&gt_bytes, kind).map_err(input)?;
    match (pred, truth) {
        (Extraction::Lir(pred), Extraction::Lir(truth)) => {
            let report = glirm(measure, &pred, &truth, cfg.beta, facet, cfg.normalization)
                .map_err(input)?;
            let alignment = cfg
                .dump_alignment
                .then(|| align_rows(measure, &pred, &truth));
            Ok((Some(report), None, alignment))
        }
        (Extraction::Kie(pred), Extraction::Kie(truth)) => {
            let report = kie_f1(&pred, &truth, measure, cfg.threshold);
            Ok((None, Some(report), None))
        }
        _ => unreachable!("parse_extraction returns the requested kind"),
    }
}

/// Serializes a report in the configured format.
pub fn render_report(report: &CorpusReport, cfg: &RunConfig) -> String {
    match cfg.format {
        crate::config::OutputFormat::Json => report.to_json_string(),
        crate::config::OutputFormat::Csv => report.to_csv_string(),
    }
}

// ---------------------------------------------------------------------------
// Backcalculation
// ---------------------------------------------------------------------------

/// Enriched extraction plus a run summary.
pub struct BackcalcOutcome {
    pub enriched_json: String,
    pub summary: serde_json::Value,
}

pub fn run_backcalc(
    ocr_path: &Path,
    extraction_path: &Path,
    kind: Option<ExtractionKind>,
    page_index: usize,
    cfg: &RunConfig,
) -> Result<BackcalcOutcome, CliError> {
    let doc = parse_ocr_document(&read_file(ocr_path)?).map_err(input)?;
    let page = doc.pages.get(page_index).ok_or_else(|| {
        input(anyhow!(
            "page {page_index} out of range: document has {} pages",
            doc.pages.len()
        ))
    })?;
    let extraction_bytes = read_file(extraction_path)?;
    let kind = match kind {
        Some(k) => k,
        None => detect_extraction_kind(&extraction_bytes).ok_or_else(|| {
            input(anyhow!(
                "cannot detect extraction kind of {}: expected a top-level \"fields\" or \"rows\" key",
                extraction_path.display()
            ))
        })?,
    };
    match parse_extraction(&extraction_bytes, kind).map_err(input)? {
        Extraction::Kie(kie) => backcalc_kie_task(kie, page),
        Extraction::Lir(table) => backcalc_lir_task(table, page, cfg),
    }
}

fn backcalc_kie_task(mut kie: KieExtraction, page: &OcrPage) -> Result<BackcalcOutcome, CliError> {
    let kv = kie.to_kv();
    let result = backcalc_kie(&kv, page, 0.0, f64::from(page.height_px)).map_err(input)?;
    let mut matched = 0usize;
    for (key, bbox) in &result.key_bbox_map {
        if let Some(bbox) = bbox {
            matched += 1;
            if let Some(cell) = kie.fields.get_mut(key) {
                cell.bbox = Some(*bbox);
            }
        }
    }
    let summary = json!({
        "kind": "kie",
        "score": result.score,
        "matched_keys": matched,
        "total_keys": kv.len(),
    });
    Ok(BackcalcOutcome {
        enriched_json: to_pretty_json(&kie),
        summary,
    })
}

fn backcalc_lir_task(
    mut table: LineItemTable,
    page: &OcrPage,
    cfg: &RunConfig,
) -> Result<BackcalcOutcome, CliError> {
    if table.rows.is_empty() {
        return Ok(BackcalcOutcome {
            enriched_json: to_pretty_json(&table),
            summary: json!({
                "kind": "lir",
                "score": 0.0,
                "scale_n": cfg.scale_n,
                "boundaries": [],
                "per_item_scores": [],
            }),
        });
    }
    let kv_rows = table.to_kv_rows();
    let mut partition =
        partition_line_items(&kv_rows, page, cfg.scale_n, cfg.strategy).map_err(input)?;
    if cfg.tighten {
        partition = tighten_bounds(&partition, &kv_rows, page);
    }
    for (row, item) in table.rows.iter_mut().zip(&partition.per_item) {
        for (key, bbox) in &item.key_bbox_map {
            if let Some(bbox) = bbox {
                if let Some(cell) = row.cells.get_mut(key) {
                    cell.bbox = Some(*bbox);
                }
            }
        }
    }
    let summary = json!({
        "kind": "lir",
        "score": partition.total_score,
        "scale_n": partition.scale_n,
        "boundaries": partition.boundaries,
        "per_item_scores": partition.per_item.iter().map(|r| r.score).collect::<Vec<f64>>(),
    });
    Ok(BackcalcOutcome {
        enriched_json: to_pretty_json(&table),
        summary,
    })
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serialization cannot fail");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

/// On-disk index file: the hash parameters plus the entries, so queries
/// hash with the same configuration the index was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFile {
    pub config: HashConfig,
    pub index: RetrievalIndex,
}

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pbm"];

/// Hashes every supported image directly inside `images_dir` (sorted by
/// file name; the file name is the identifier).
pub fn build_index(images_dir: &Path, cfg: &RunConfig) -> Result<IndexFile, CliError> {
    let hash_config = HashConfig {
        hash_size: cfg.hash_size,
        levels: cfg.hash_levels,
        ties_to_one: false,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(images_dir)
        .with_context(|| format!("cannot read directory {}", images_dir.display()))
        .map_err(input)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|ext| IMAGE_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(input(anyhow!(
            "no {IMAGE_EXTENSIONS:?} images in {}",
            images_dir.display()
        )));
    }

    let mut index = RetrievalIndex::new();
    for path in &paths {
        let image = decode_image(&read_file(path)?)
            .map_err(|e| input(anyhow!("{}: {e}", path.display())))?;
        let hash = wavelet_hash_with(&image, &hash_config)
            .map_err(|e| input(anyhow!("{}: {e}", path.display())))?;
        let id = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| input(anyhow!("non-UTF-8 file name {}", path.display())))?;
        index.insert(id, hash).map_err(input)?;
    }
    Ok(IndexFile {
        config: hash_config,
        index,
    })
}

/// Ranked `(identifier, distance)` matches for a query image.
pub fn query_index(
    index_path: &Path,
    image_path: &Path,
    k: usize,
) -> Result<Vec<(String, u32)>, CliError> {
    let index_file: IndexFile =
        serde_json::from_slice(&read_file(index_path)?).map_err(input)?;
    let image = decode_image(&read_file(image_path)?).map_err(input)?;
    let query = wavelet_hash_with(&image, &index_file.config).map_err(input)?;
    retrieve_nearest(&index_file.index, &query, k).map_err(input)
}

// ---------------------------------------------------------------------------
// Prompting and linting
// ---------------------------------------------------------------------------

/// Renders every page of an OCR document as a layout prompt; pages are
/// separated by a form-feed line.
pub fn render_prompts(ocr_path: &Path, char_cell_px: Option<f64>) -> Result<String, CliError> {
    let doc = parse_ocr_document(&read_file(ocr_path)?).map_err(input)?;
    let prompts: Vec<String> = doc
        .pages
        .iter()
        .map(|page| {
            let cell = char_cell_px
                .or_else(|| default_char_cell_px(page))
                .unwrap_or(1.0);
            build_layout_prompt(page, cell).text
        })
        .collect();
    Ok(prompts.join("\n\u{000C}\n"))
}

pub fn run_lint(
    schema_path: &Path,
    samples_path: Option<&Path>,
) -> Result<Vec<SchemaLintFinding>, CliError> {
    let schema_bytes = read_file(schema_path)?;
    let samples_bytes = match samples_path {
        Some(path) => Some(read_file(path)?),
        None => None,
    };
    lint_schema_bytes(&schema_bytes, samples_bytes.as_deref()).map_err(input)
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

pub fn run_ingest(
    record_path: &Path,
    remap_path: Option<&Path>,
    page_size: Option<(u32, u32)>,
) -> Result<(KieExtraction, LineItemTable), CliError> {
    let remap = match remap_path {
        Some(path) => {
            glirm::ingest::RemapConfig::from_json_slice(&read_file(path)?).map_err(input)?
        }
        None => glirm::ingest::RemapConfig::default(),
    };
    glirm::ingest::ingest_annotation_record(&read_file(record_path)?, &remap, page_size)
        .map_err(input)
}

/// Writes to the configured output path, or standard output when none is
/// set.
pub fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(input),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
