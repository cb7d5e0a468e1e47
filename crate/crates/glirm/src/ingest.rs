//! Thin adapter from dataset-style annotation records (a flat list of
//! field extractions, each optionally tied to a line item) into the
//! evaluation formats.
//!
//! Input shape:
//!
//! ```json
//! {"field_extractions": [
//!   {"fieldtype": "invoice_number", "text": "12345", "bbox": [..],
//!    "page": 0, "line_item_id": null}
//! ]}
//! ```
//!
//! Fields without a `line_item_id` become document-level key-value fields;
//! fields with one are grouped into rows by ascending id. Field names are
//! renamed through a remap table; on key collisions the first occurrence
//! wins.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::model::{Cell, KieExtraction, LineItem, LineItemTable};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("field {index} ({fieldtype:?}): {message}")]
    BadField {
        index: usize,
        fieldtype: String,
        message: String,
    },
}

/// Field-name remapping, supplied via a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RemapConfig {
    /// Source fieldtype to output column/field key.
    #[serde(default)]
    pub field_map: BTreeMap<String, String>,
    /// Drop fields whose fieldtype has no mapping instead of keeping the
    /// original name.
    #[serde(default)]
    pub drop_unmapped: bool,
}

impl RemapConfig {
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, IngestError> {
        serde_json::from_slice(bytes).map_err(|e| IngestError::MalformedRecord(e.to_string()))
    }

    fn map<'a>(&'a self, fieldtype: &'a str) -> Option<&'a str> {
        match self.field_map.get(fieldtype) {
            Some(mapped) => Some(mapped.as_str()),
            None if self.drop_unmapped => None,
            None => Some(fieldtype),
        }
    }
}

#[derive(Deserialize)]
struct AnnotationRecord {
    field_extractions: Vec<AnnotationField>,
}

#[derive(Deserialize)]
struct AnnotationField {
    fieldtype: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    bbox: Option<[f64; 4]>,
    #[serde(default)]
    line_item_id: Option<i64>,
}

/// Converts one annotation record into a key-value extraction and a
/// line-item table. `page_size`, when given, scales normalized `[0, 1]`
/// bboxes to pixels.
pub fn ingest_annotation_record(
    bytes: &[u8],
    remap: &RemapConfig,
    page_size: Option<(u32, u32)>,
) -> Result<(KieExtraction, LineItemTable), IngestError> {
    let record: AnnotationRecord =
        serde_json::from_slice(bytes).map_err(|e| IngestError::MalformedRecord(e.to_string()))?;

    let mut kie_fields: BTreeMap<String, Cell> = BTreeMap::new();
    let mut items: BTreeMap<i64, LineItem> = BTreeMap::new();

    for (index, field) in record.field_extractions.iter().enumerate() {
        let Some(key) = remap.map(&field.fieldtype) else {
            continue;
        };
        let bbox = match field.bbox {
            Some([x0, y0, x1, y1]) => {
                let (sx, sy) = match page_size {
                    Some((w, h)) => (f64::from(w), f64::from(h)),
                    None => (1.0, 1.0),
                };
                Some(
                    BBox::new(x0 * sx, y0 * sy, x1 * sx, y1 * sy).ok_or_else(|| {
                        IngestError::BadField {
                            index,
                            fieldtype: field.fieldtype.clone(),
                            message: "bbox corners inverted or not finite".into(),
                        }
                    })?,
                )
            }
            None => None,
        };
        if field.text.is_none() && bbox.is_none() {
            return Err(IngestError::BadField {
                index,
                fieldtype: field.fieldtype.clone(),
                message: "field has neither text nor bbox".into(),
            });
        }
        let cell = Cell {
            value: field.text.clone(),
            bbox,
        };
        match field.line_item_id {
            None => {
                kie_fields.entry(key.to_string()).or_insert(cell);
            }
            Some(item_id) => {
                items
                    .entry(item_id)
                    .or_default()
                    .cells
                    .entry(key.to_string())
                    .or_insert(cell);
            }
        }
    }

    let rows: Vec<LineItem> = items.into_values().collect();
    Ok((
        KieExtraction { fields: kie_fields },
        LineItemTable { rows },
    ))
}
