//! Document and extraction data model: OCR pages, key-value extractions,
//! and line-item tables, with JSON parsing and serialization.
//!
//! Wire formats (UTF-8 JSON):
//!
//! - OCR document:
//!   `{"pages":[{"width":W,"height":H,"words":[{"text":"...","bbox":[x0,y0,x1,y1],"reading_order":N?}]}]}`
//!   plus an optional top-level `"normalized_coords": true` marking bboxes
//!   as fractions of the page size, converted to pixels at parse time.
//! - KIE extraction: `{"fields":{"key":{"value":"..."?,"bbox":[..]?}}}`
//! - LIR extraction: `{"rows":[{"key":{"value":"..."?,"bbox":[..]?}}]}` —
//!   array order is row order and is preserved exactly.
//!
//! All types are immutable after construction and safe to share across
//! threads; parsing is a pure function of its input bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::similarity::Facet;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("duplicate reading order {order} on page {page}")]
    DuplicateReadingOrder { page: usize, order: usize },
    #[error("cell {path:?} has neither value nor bbox")]
    EmptyCell { path: String },
}

/// One recognized word with its pixel bounding box and position in the
/// page's reading order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcrWord {
    pub text: String,
    pub bbox: BBox,
    pub reading_order: usize,
}

/// A page of OCR output. `words` is sorted by `reading_order`, and the
/// reading-order indices are unique and contiguous from zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcrPage {
    #[serde(rename = "width")]
    pub width_px: u32,
    #[serde(rename = "height")]
    pub height_px: u32,
    pub words: Vec<OcrWord>,
}

impl OcrPage {
    /// Median word height in pixels; zero for an empty page.
    pub fn median_word_height(&self) -> f64 {
        median(self.words.iter().map(|w| w.bbox.height()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcrDocument {
    pub pages: Vec<OcrPage>,
}

/// A single extracted cell. At least one of `value` and `bbox` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
}

impl Cell {
    pub fn text(value: impl Into<String>) -> Self {
        Cell {
            value: Some(value.into()),
            bbox: None,
        }
    }

    pub fn boxed(bbox: BBox) -> Self {
        Cell {
            value: None,
            bbox: Some(bbox),
        }
    }

    pub fn with_bbox(mut self, bbox: BBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    /// Whether the cell carries the requested facet.
    pub fn has_facet(&self, facet: Facet) -> bool {
        match facet {
            Facet::Content => self.value.is_some(),
            Facet::Location => self.bbox.is_some(),
        }
    }
}

/// One table row: column key to cell. Keys are unique; no column order is
/// stored, which makes every consumer invariant to column shuffling.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineItem {
    pub cells: BTreeMap<String, Cell>,
}

impl LineItem {
    pub fn new(cells: BTreeMap<String, Cell>) -> Self {
        LineItem { cells }
    }

    pub fn cell_count(&self, facet: Facet) -> usize {
        self.cells.values().filter(|c| c.has_facet(facet)).count()
    }

    /// Renders the row as a key-to-string map over cells that carry text,
    /// the shape consumed by bounding-box backcalculation.
    pub fn to_kv(&self) -> BTreeMap<String, String> {
        self.cells
            .iter()
            .filter_map(|(k, c)| c.value.as_ref().map(|v| (k.clone(), v.clone())))
            .collect()
    }
}

/// An ordered sequence of line items. Row order is significant and survives
/// serialization round-trips.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LineItemTable {
    pub rows: Vec<LineItem>,
}

impl LineItemTable {
    pub fn new(rows: Vec<LineItem>) -> Self {
        LineItemTable { rows }
    }

    /// Total number of cells across rows that carry the requested facet.
    pub fn cell_count(&self, facet: Facet) -> usize {
        self.rows.iter().map(|r| r.cell_count(facet)).sum()
    }

    pub fn to_kv_rows(&self) -> Vec<BTreeMap<String, String>> {
        self.rows.iter().map(LineItem::to_kv).collect()
    }
}

/// Document-level key-value extraction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KieExtraction {
    pub fields: BTreeMap<String, Cell>,
}

impl KieExtraction {
    pub fn new(fields: BTreeMap<String, Cell>) -> Self {
        KieExtraction { fields }
    }

    pub fn cell_count(&self, facet: Facet) -> usize {
        self.fields.values().filter(|c| c.has_facet(facet)).count()
    }

    /// Key-to-string map over fields that carry text.
    pub fn to_kv(&self) -> BTreeMap<String, String> {
        self.fields
            .iter()
            .filter_map(|(k, c)| c.value.as_ref().map(|v| (k.clone(), v.clone())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionKind {
    Kie,
    Lir,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Extraction {
    Kie(KieExtraction),
    Lir(LineItemTable),
}

// ---------------------------------------------------------------------------
// OCR parsing
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct WireOcrDocument {
    pages: Vec<WireOcrPage>,
    #[serde(default)]
    normalized_coords: bool,
}

#[derive(Deserialize)]
struct WireOcrPage {
    width: u32,
    height: u32,
    #[serde(default)]
    words: Vec<WireOcrWord>,
}

#[derive(Deserialize)]
struct WireOcrWord {
    text: String,
    bbox: [f64; 4],
    #[serde(default)]
    reading_order: Option<usize>,
}

/// Parses an OCR document record, validating geometry and reading order.
///
/// Words come back sorted by reading order. When no word on a page carries
/// a `reading_order`, indices are reconstructed by binning words into lines
/// (bin height = median word height, top to bottom) and ordering each line
/// left to right.
pub fn parse_ocr_document(bytes: &[u8]) -> Result<OcrDocument, ParseError> {
    let wire: WireOcrDocument = serde_json::from_slice(bytes)
        .map_err(|e| ParseError::MalformedInput(e.to_string()))?;
    let mut pages = Vec::with_capacity(wire.pages.len());
    for (page_idx, page) in wire.pages.into_iter().enumerate() {
        pages.push(convert_page(page_idx, page, wire.normalized_coords)?);
    }
    Ok(OcrDocument { pages })
}

fn convert_page(
    page_idx: usize,
    page: WireOcrPage,
    normalized: bool,
) -> Result<OcrPage, ParseError> {
    if page.width == 0 || page.height == 0 {
        return Err(ParseError::MalformedInput(format!(
            "page {page_idx}: width and height must be positive"
        )));
    }
    let (w, h) = (f64::from(page.width), f64::from(page.height));
    let mut words = Vec::with_capacity(page.words.len());
    let mut with_order = 0usize;
    for (word_idx, word) in page.words.into_iter().enumerate() {
        let [mut x0, mut y0, mut x1, mut y1] = word.bbox;
        if normalized {
            x0 *= w;
            x1 *= w;
            y0 *= h;
            y1 *= h;
        }
        let bbox = BBox::new(x0, y0, x1, y1).ok_or_else(|| {
            ParseError::Geometry(format!(
                "page {page_idx} word {word_idx} ({:?}): corners inverted or not finite",
                word.text
            ))
        })?;
        if bbox.x0 < 0.0 || bbox.y0 < 0.0 || bbox.x1 > w || bbox.y1 > h {
            return Err(ParseError::Geometry(format!(
                "page {page_idx} word {word_idx} ({:?}): bbox outside page bounds",
                word.text
            )));
        }
        if word.reading_order.is_some() {
            with_order += 1;
        }
        words.push((word.text, bbox, word.reading_order));
    }

    let words = if with_order == 0 {
        assign_reading_order(words)
    } else if with_order == words.len() {
        let mut seen = vec![false; words.len()];
        for (_, _, order) in &words {
            let order = order.expect("checked above");
            match seen.get_mut(order) {
                Some(slot) if !*slot => *slot = true,
                Some(_) => {
                    return Err(ParseError::DuplicateReadingOrder {
                        page: page_idx,
                        order,
                    })
                }
                None => {
                    return Err(ParseError::MalformedInput(format!(
                        "page {page_idx}: reading_order {order} out of range (must be contiguous from 0)"
                    )))
                }
            }
        }
        let mut out: Vec<OcrWord> = words
            .into_iter()
            .map(|(text, bbox, order)| OcrWord {
                text,
                bbox,
                reading_order: order.expect("checked above"),
            })
            .collect();
        out.sort_by_key(|w| w.reading_order);
        out
    } else {
        return Err(ParseError::MalformedInput(format!(
            "page {page_idx}: reading_order must be set on all words or none"
        )));
    };

    Ok(OcrPage {
        width_px: page.width,
        height_px: page.height,
        words,
    })
}

/// Reconstructs reading order: lines binned by vertical center (bin height =
/// median word height), top to bottom, then left to right within a line.
fn assign_reading_order(words: Vec<(String, BBox, Option<usize>)>) -> Vec<OcrWord> {
    let bin = median(words.iter().map(|(_, b, _)| b.height()));
    let mut keyed: Vec<(i64, f64, f64, usize, String, BBox)> = words
        .into_iter()
        .enumerate()
        .map(|(idx, (text, bbox, _))| {
            let line = if bin > 0.0 {
                (bbox.center_y() / bin).floor() as i64
            } else {
                0
            };
            (line, bbox.x0, bbox.center_y(), idx, text, bbox)
        })
        .collect();
    keyed.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    keyed
        .into_iter()
        .enumerate()
        .map(|(order, (_, _, _, _, text, bbox))| OcrWord {
            text,
            bbox,
            reading_order: order,
        })
        .collect()
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

// ---------------------------------------------------------------------------
// Extraction parsing
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct WireKie {
    fields: BTreeMap<String, WireCell>,
}

#[derive(Deserialize)]
struct WireLir {
    rows: Vec<BTreeMap<String, WireCell>>,
}

#[derive(Deserialize)]
struct WireCell {
    #[serde(default)]
    value: Option<String>,
    #[serde(default)]
    bbox: Option<[f64; 4]>,
}

fn convert_cell(path: &str, cell: WireCell) -> Result<Cell, ParseError> {
    let bbox = match cell.bbox {
        Some([x0, y0, x1, y1]) => Some(BBox::new(x0, y0, x1, y1).ok_or_else(|| {
            ParseError::Geometry(format!(
                "cell {path:?}: corners inverted or not finite"
            ))
        })?),
        None => None,
    };
    if cell.value.is_none() && bbox.is_none() {
        return Err(ParseError::EmptyCell {
            path: path.to_string(),
        });
    }
    Ok(Cell {
        value: cell.value,
        bbox,
    })
}

/// Parses a serialized extraction record of the given kind.
///
/// For line-item tables the input array order is the row order and is kept
/// exactly. A cell with neither value nor bbox is rejected; absent keys are
/// the representation for missing cells.
pub fn parse_extraction(bytes: &[u8], kind: ExtractionKind) -> Result<Extraction, ParseError> {
    match kind {
        ExtractionKind::Kie => {
            let wire: WireKie = serde_json::from_slice(bytes)
                .map_err(|e| ParseError::MalformedInput(e.to_string()))?;
            let mut fields = BTreeMap::new();
            for (key, cell) in wire.fields {
                let converted = convert_cell(&key, cell)?;
                fields.insert(key, converted);
            }
            Ok(Extraction::Kie(KieExtraction { fields }))
        }
        ExtractionKind::Lir => {
            let wire: WireLir = serde_json::from_slice(bytes)
                .map_err(|e| ParseError::MalformedInput(e.to_string()))?;
            let mut rows = Vec::with_capacity(wire.rows.len());
            for (row_idx, row) in wire.rows.into_iter().enumerate() {
                let mut cells = BTreeMap::new();
                for (key, cell) in row {
                    let path = format!("rows[{row_idx}].{key}");
                    cells.insert(key, convert_cell(&path, cell)?);
                }
                rows.push(LineItem { cells });
            }
            Ok(Extraction::Lir(LineItemTable { rows }))
        }
    }
}

/// Sniffs the extraction kind from the top-level key (`"fields"` vs
/// `"rows"`). Returns `None` when neither shape matches.
pub fn detect_extraction_kind(bytes: &[u8]) -> Option<ExtractionKind> {
    let value: serde_json::Value = serde_json::from_slice(bytes).ok()?;
    let obj = value.as_object()?;
    if obj.contains_key("fields") {
        Some(ExtractionKind::Kie)
    } else if obj.contains_key("rows") {
        Some(ExtractionKind::Lir)
    } else {
        None
    }
}
