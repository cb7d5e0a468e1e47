//! Layout-preserving prompt serialization: renders an OCR page onto a
//! monospace character grid so that a text-only model sees the spatial
//! arrangement of the page.
//!
//! Words are placed in reading order at `row = floor(center_y /
//! char_cell_px)`, `col = floor(x0 / char_cell_px)`. Placement never moves
//! up or left: a word whose grid position would collide with or precede the
//! previous word shifts right (with a one-space gap) on the current line
//! instead. This guarantees that reading the prompt's non-space tokens left
//! to right, top to bottom reproduces the page's reading-order word
//! sequence exactly, provided word texts contain no whitespace. Rows with
//! no words are skipped, so the line count equals the number of distinct
//! occupied grid rows.

use serde::{Deserialize, Serialize};

use crate::model::OcrPage;

/// A rendered page prompt and the cell size used for the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPrompt {
    pub text: String,
    pub char_cell_px: f64,
}

/// The page-adaptive default cell size: the median word height. Returns
/// `None` for pages with no words or degenerate (zero-height) boxes.
pub fn default_char_cell_px(page: &OcrPage) -> Option<f64> {
    let median = page.median_word_height();
    (median > 0.0).then_some(median)
}

/// Renders the page onto a character grid of `char_cell_px` pixels per
/// cell. An empty page renders as the empty string.
/// Upper bound on the starting column, so degenerate cell sizes cannot
/// inflate a line into gigabytes of padding.
const MAX_GRID_COL: usize = 10_000;

pub fn build_layout_prompt(page: &OcrPage, char_cell_px: f64) -> LayoutPrompt {
    assert!(
        char_cell_px > 0.0 && char_cell_px.is_finite(),
        "char_cell_px must be positive"
    );

    // (row, start column, text); built strictly in raster order.
    let mut placed: Vec<(i64, usize, &str)> = Vec::new();
    let mut cur_row = i64::MIN;
    let mut next_free_col = 0usize;
    for word in &page.words {
        if word.text.is_empty() {
            continue;
        }
        let geom_row = (word.bbox.center_y() / char_cell_px).floor() as i64;
        let geom_col = ((word.bbox.x0 / char_cell_px).floor().max(0.0) as usize).min(MAX_GRID_COL);
        let (row, col) = if geom_row > cur_row {
            (geom_row, geom_col)
        } else {
            // Same or earlier line than the previous word: stay on the
            // current line and shift right past it if needed.
            (cur_row, geom_col.max(next_free_col))
        };
        let width = word.text.chars().count();
        placed.push((row, col, word.text.as_str()));
        cur_row = row;
        next_free_col = col + width + 1;
    }

    let mut lines: Vec<String> = Vec::new();
    let mut line = String::new();
    let mut line_row = i64::MIN;
    let mut line_cols = 0usize;
    for (row, col, text) in placed {
        if row != line_row {
            if line_row != i64::MIN {
                lines.push(std::mem::take(&mut line));
            }
            line_row = row;
            line_cols = 0;
        }
        for _ in line_cols..col {
            line.push(' ');
        }
        line.push_str(text);
        line_cols = col + text.chars().count();
    }
    if line_row != i64::MIN {
        lines.push(line);
    }

    LayoutPrompt {
        text: lines.join("\n"),
        char_cell_px,
    }
}
