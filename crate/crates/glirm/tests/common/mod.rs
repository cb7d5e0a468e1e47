//! Shared generators and independent oracles for the integration suites.
//!
//! Everything here recomputes expected values from first principles
//! (exhaustive enumeration, brute-force recursion, linear scans) so the
//! library implementations are checked against an independent route.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use glirm::geometry::BBox;
use glirm::model::{Cell, LineItem, LineItemTable, OcrPage, OcrWord};
use glirm::similarity::{row_score, SimilarityMeasure};

// ---------------------------------------------------------------------------
// Table generators
// ---------------------------------------------------------------------------

/// A random table whose cell values are globally unique (tagged with `tag`
/// and position), so no two distinct cells ever match under exact
/// comparison.
pub fn unique_value_table(
    rng: &mut impl Rng,
    max_rows: usize,
    max_cols: usize,
    tag: &str,
) -> LineItemTable {
    let rows = rng.gen_range(0..=max_rows);
    let table = (0..rows)
        .map(|r| {
            let cols = rng.gen_range(1..=max_cols);
            let cells: BTreeMap<String, Cell> = (0..cols)
                .map(|c| {
                    (
                        format!("col{c}"),
                        Cell::text(format!("{tag}_r{r}c{c}_{}", rng.gen_range(0..1_000_000))),
                    )
                })
                .collect();
            LineItem { cells }
        })
        .collect();
    LineItemTable::new(table)
}

/// A random prediction derived from the truth: keeps row order, may drop
/// cells, mutate values, drop rows, and insert junk rows.
pub fn derived_prediction(rng: &mut impl Rng, truth: &LineItemTable) -> LineItemTable {
    let mut rows = Vec::new();
    for row in &truth.rows {
        if rng.gen_bool(0.15) {
            continue; // dropped row
        }
        let mut cells = BTreeMap::new();
        for (key, cell) in &row.cells {
            if rng.gen_bool(0.2) {
                continue; // missing cell
            }
            let value = cell.value.clone().unwrap_or_default();
            let value = if rng.gen_bool(0.25) {
                format!("{value}x") // noisy value
            } else {
                value
            };
            cells.insert(key.clone(), Cell::text(value));
        }
        rows.push(LineItem { cells });
        if rng.gen_bool(0.15) {
            rows.push(junk_row(rng, "pjunk"));
        }
    }
    LineItemTable::new(rows)
}

/// A row that matches nothing: unique key and value outside every
/// generator alphabet.
pub fn junk_row(rng: &mut impl Rng, tag: &str) -> LineItem {
    let cells: BTreeMap<String, Cell> = std::iter::once((
        format!("zz_{tag}"),
        Cell::text(format!("{tag}_{}", rng.gen_range(0..1_000_000))),
    ))
    .collect();
    LineItem { cells }
}

// ---------------------------------------------------------------------------
// Alignment oracles
// ---------------------------------------------------------------------------

/// Exhaustive maximum over all equal-length subsequence pairs of the
/// summed row scores.
pub fn subsequence_oracle(
    measure: &SimilarityMeasure,
    pred: &LineItemTable,
    truth: &LineItemTable,
) -> f64 {
    let (m, n) = (pred.rows.len(), truth.rows.len());
    assert!(m <= 16 && n <= 16, "oracle is exponential");
    let mut best = 0.0f64;
    for mask_p in 0u32..(1 << m) {
        let rows_p: Vec<usize> = (0..m).filter(|i| mask_p & (1 << i) != 0).collect();
        for mask_t in 0u32..(1 << n) {
            let rows_t: Vec<usize> = (0..n).filter(|j| mask_t & (1 << j) != 0).collect();
            if rows_p.len() != rows_t.len() {
                continue;
            }
            let sum: f64 = rows_p
                .iter()
                .zip(&rows_t)
                .map(|(&i, &j)| row_score(measure, &pred.rows[i], &truth.rows[j]))
                .sum();
            best = best.max(sum);
        }
    }
    best
}

/// Exhaustive maximum-weight matching (order-free) by recursion over
/// predicted rows.
pub fn matching_oracle(measure: &SimilarityMeasure, pred: &LineItemTable, truth: &LineItemTable) -> f64 {
    let weights: Vec<Vec<f64>> = pred
        .rows
        .iter()
        .map(|rp| truth.rows.iter().map(|rt| row_score(measure, rp, rt)).collect())
        .collect();
    fn rec(weights: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
        if i == weights.len() {
            return 0.0;
        }
        let mut best = rec(weights, i + 1, used);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.max(weights[i][j] + rec(weights, i + 1, used));
                used[j] = false;
            }
        }
        best
    }
    if pred.rows.is_empty() || truth.rows.is_empty() {
        return 0.0;
    }
    rec(&weights, 0, &mut vec![false; truth.rows.len()])
}

// ---------------------------------------------------------------------------
// Edit-distance oracle
// ---------------------------------------------------------------------------

/// The recursive edit-distance definition, memoized on (prefix, prefix):
/// `lev(a, b) = min(del, ins, sub)` with unit costs.
pub fn recursive_edit_distance(a: &[u8], b: &[u8]) -> usize {
    const UNSET: u8 = u8::MAX;
    fn rec(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut [[u8; 9]; 9]) -> u8 {
        if memo[i][j] != UNSET {
            return memo[i][j];
        }
        let value = if i == 0 {
            j as u8
        } else if j == 0 {
            i as u8
        } else {
            let del = rec(a, b, i - 1, j, memo) + 1;
            let ins = rec(a, b, i, j - 1, memo) + 1;
            let sub = rec(a, b, i - 1, j - 1, memo) + u8::from(a[i - 1] != b[j - 1]);
            del.min(ins).min(sub)
        };
        memo[i][j] = value;
        value
    }
    assert!(a.len() <= 8 && b.len() <= 8);
    let mut memo = [[UNSET; 9]; 9];
    rec(a, b, a.len(), b.len(), &mut memo) as usize
}

/// All strings over `alphabet` with length up to `max_len`.
pub fn all_strings(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &frontier {
            for &c in alphabet {
                let mut s = prefix.clone();
                s.push(c);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Synthetic pages
// ---------------------------------------------------------------------------

pub const LINE_HEIGHT: f64 = 40.0;
pub const WORD_HEIGHT: f64 = 20.0;

/// Lays out text lines top to bottom with uniform metrics: line `i` spans
/// `[i*LINE_HEIGHT + 10, i*LINE_HEIGHT + 30]`, so every word on a line has
/// vertical center `i*LINE_HEIGHT + 20`.
pub fn page_of_lines(lines: &[Vec<String>], width_px: u32) -> OcrPage {
    let mut words = Vec::new();
    let mut order = 0usize;
    for (line_idx, line) in lines.iter().enumerate() {
        let y0 = line_idx as f64 * LINE_HEIGHT + 10.0;
        let mut x = 4.0;
        for token in line {
            let w = token.chars().count() as f64 * 7.0;
            words.push(OcrWord {
                text: token.clone(),
                bbox: BBox::new(x, y0, x + w, y0 + WORD_HEIGHT).unwrap(),
                reading_order: order,
            });
            order += 1;
            x += w + 6.0;
        }
    }
    OcrPage {
        width_px,
        height_px: (lines.len().max(1) as f64 * LINE_HEIGHT) as u32,
        words,
    }
}

/// A synthetic line-item page: each row's fields appear verbatim on the
/// row's own lines (tokens globally unique), with optional distractor
/// lines between rows. Returns the page, the rendered rows, and for each
/// row the truth bbox per key (the union of the words that carry the
/// value).
pub struct SyntheticLirPage {
    pub page: OcrPage,
    pub rows: Vec<BTreeMap<String, String>>,
    pub truth_boxes: Vec<BTreeMap<String, BBox>>,
}

pub fn synthetic_lir_page(rng: &mut impl Rng, max_rows: usize) -> SyntheticLirPage {
    let row_count = rng.gen_range(1..=max_rows);
    let mut token_id = 0usize;
    let mut fresh = move || {
        token_id += 1;
        format!("tok{token_id:04}")
    };

    let mut lines: Vec<Vec<String>> = Vec::new();
    let mut row_lines: Vec<Vec<usize>> = Vec::new(); // line indices per row
    let mut rows: Vec<BTreeMap<String, String>> = Vec::new();
    let mut row_specs: Vec<Vec<(String, Vec<String>)>> = Vec::new();

    for _ in 0..row_count {
        // 1-3 fields, each worth 1-2 words.
        let field_count = rng.gen_range(1..=3);
        let mut fields = Vec::new();
        for f in 0..field_count {
            let word_count = rng.gen_range(1..=2);
            let words: Vec<String> = (0..word_count).map(|_| fresh()).collect();
            fields.push((format!("col{f}"), words));
        }
        // All of the row's words on one line, in field order.
        let line: Vec<String> = fields.iter().flat_map(|(_, ws)| ws.clone()).collect();
        lines.push(line);
        row_lines.push(vec![lines.len() - 1]);
        rows.push(
            fields
                .iter()
                .map(|(k, ws)| (k.clone(), ws.join(" ")))
                .collect(),
        );
        row_specs.push(fields);
        // Optional distractor line that matches nothing.
        if rng.gen_bool(0.3) {
            lines.push(vec![fresh(), fresh()]);
        }
    }

    let page = page_of_lines(&lines, 600);

    // Truth boxes: union of the words carrying each field's tokens.
    let mut truth_boxes = Vec::new();
    for (row_idx, fields) in row_specs.iter().enumerate() {
        let line_idx = row_lines[row_idx][0];
        let line_words: Vec<&OcrWord> = page
            .words
            .iter()
            .filter(|w| {
                let line = ((w.bbox.center_y() - 20.0) / LINE_HEIGHT).round() as usize;
                line == line_idx
            })
            .collect();
        let mut boxes = BTreeMap::new();
        let mut cursor = 0usize;
        for (key, words) in fields {
            let mut bbox: Option<BBox> = None;
            for token in words {
                let w = line_words[cursor];
                assert_eq!(&w.text, token, "generator bookkeeping out of sync");
                bbox = Some(match bbox {
                    None => w.bbox,
                    Some(b) => b.union(&w.bbox),
                });
                cursor += 1;
            }
            boxes.insert(key.clone(), bbox.expect("fields have at least one word"));
        }
        truth_boxes.push(boxes);
    }

    SyntheticLirPage {
        page,
        rows,
        truth_boxes,
    }
}

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

/// Shuffles the insertion order of every row's cells; the logical content
/// is unchanged.
pub fn shuffle_row_insertion(rng: &mut impl Rng, table: &LineItemTable) -> LineItemTable {
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let mut pairs: Vec<(String, Cell)> =
                row.cells.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            pairs.shuffle(rng);
            LineItem {
                cells: pairs.into_iter().collect(),
            }
        })
        .collect();
    LineItemTable::new(rows)
}

/// Prints the acceptance verdict line and fails the test on a violation.
pub fn conclude(name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("PASS: {name}");
    } else {
        println!("FAIL: {name}");
    }
    assert!(
        failures.is_empty(),
        "{name} failed with {} violations; first: {}",
        failures.len(),
        failures[0]
    );
}
