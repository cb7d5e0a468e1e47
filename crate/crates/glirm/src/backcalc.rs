//! Bounding-box backcalculation: recovering pixel boxes for predicted
//! values by matching them against OCR words.
//!
//! For key-value extractions, each value is matched to the contiguous
//! window of in-band words (reading order) whose space-joined normalized
//! text has the highest edit similarity to the normalized value; the
//! window's union box is reported and the similarity accrues to the
//! matching score. For line-item tables, the page is divided vertically
//! into one band per row on a `scale_n`-level grid so that the summed band
//! scores are maximal; band scores are monotone under band inclusion, which
//! the divide-and-conquer strategy and the bound-tightening binary searches
//! rely on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::model::OcrPage;
use crate::text::{normalize_text, normalized_edit_similarity};

/// Rendered row or extraction: column key to predicted text value.
pub type KvMap = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum BackcalcError {
    #[error("invalid band: y_lo {y_lo} > y_hi {y_hi}")]
    InvalidBand { y_lo: f64, y_hi: f64 },
    #[error("line-item table is empty")]
    EmptyTable,
    #[error("scale_n must be in 2..={MAX_SCALE_N}, got {0}")]
    InvalidScale(u32),
    #[error("grid band {lo}..{hi} outside 0..{scale_n}")]
    InvalidGridBand { lo: u32, hi: u32, scale_n: u32 },
}

/// Upper bound on the grid resolution; pages are at most tens of
/// thousands of pixels tall, so finer grids only burn memory.
pub const MAX_SCALE_N: u32 = 1 << 16;

fn validate_scale(scale_n: u32) -> Result<(), BackcalcError> {
    if (2..=MAX_SCALE_N).contains(&scale_n) {
        Ok(())
    } else {
        Err(BackcalcError::InvalidScale(scale_n))
    }
}

/// Matching score and per-key boxes for one key-value map over one band.
/// Keys that match nothing map to `None` and contribute zero to the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackcalcResult {
    pub score: f64,
    pub key_bbox_map: BTreeMap<String, Option<BBox>>,
}

/// A vertical division of the page into one band per line item.
///
/// `boundaries` has one entry per band edge (`rows + 1` values) in grid
/// units on the `scale_n`-level grid; band `i` covers grid rows
/// `boundaries[i]..boundaries[i+1]`, half-open except that a band ending at
/// the page bottom includes it. `per_item` holds each band's backcalculated
/// result and `total_score` their summed scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub boundaries: Vec<u32>,
    pub per_item: Vec<BackcalcResult>,
    pub total_score: f64,
    pub scale_n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStrategy {
    /// Dynamic program over (item, boundary) states; O(M·N²) band
    /// evaluations.
    Naive,
    /// Divide-and-conquer over monotone split points; O(M·N·log N) band
    /// evaluations.
    Dc,
}

impl std::str::FromStr for PartitionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(PartitionStrategy::Naive),
            "dc" => Ok(PartitionStrategy::Dc),
            other => Err(format!("unknown strategy {other:?} (expected: naive, dc)")),
        }
    }
}

/// Search-effort counters for one partitioning run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PartitionStats {
    /// Number of band evaluations performed by the dynamic program.
    pub band_evals: u64,
}

// ---------------------------------------------------------------------------
// Band evaluation
// ---------------------------------------------------------------------------

struct CtxWord {
    norm: String,
    chars: usize,
    bbox: BBox,
    center_y: f64,
}

struct PageCtx {
    words: Vec<CtxWord>,
    height_px: f64,
}

impl PageCtx {
    fn new(page: &OcrPage) -> Self {
        let words = page
            .words
            .iter()
            .map(|w| {
                let norm = normalize_text(&w.text);
                CtxWord {
                    chars: norm.chars().count(),
                    norm,
                    bbox: w.bbox,
                    center_y: w.bbox.center_y(),
                }
            })
            .collect();
        PageCtx {
            words,
            height_px: f64::from(page.height_px),
        }
    }
}

struct Target {
    key: String,
    norm: String,
    chars: usize,
}

fn targets_of(kv: &KvMap) -> Vec<Target> {
    kv.iter()
        .map(|(k, v)| {
            let norm = normalize_text(v);
            Target {
                key: k.clone(),
                chars: norm.chars().count(),
                norm,
            }
        })
        .collect()
}

/// Best contiguous window of `words` for one target value: maximal edit
/// similarity, ties broken by fewer words, then by earliest start.
fn best_window(words: &[&CtxWord], target: &Target) -> Option<(f64, BBox)> {
    let mut best: Option<(f64, usize, BBox)> = None;
    for start in 0..words.len() {
        let mut joined = String::new();
        let mut joined_chars = 0usize;
        let mut bbox = words[start].bbox;
        for (offset, word) in words[start..].iter().enumerate() {
            if offset > 0 {
                bbox = bbox.union(&word.bbox);
            }
            if !word.norm.is_empty() {
                if !joined.is_empty() {
                    joined.push(' ');
                    joined_chars += 1;
                }
                joined.push_str(&word.norm);
                joined_chars += word.chars;
            }
            let sim = normalized_edit_similarity(&joined, &target.norm);
            if sim > 0.0 {
                let len = offset + 1;
                let improves = match &best {
                    None => true,
                    Some((s, l, _)) => sim > *s || (sim == *s && len < *l),
                };
                if improves {
                    best = Some((sim, len, bbox));
                }
            }
            // Growing the window can only lower the similarity ceiling
            // target_chars / joined_chars once the join is longer than the
            // target; stop extending when that ceiling is below the best.
            if let Some((s, _, _)) = &best {
                if joined_chars > target.chars
                    && (target.chars as f64) < *s * (joined_chars as f64)
                {
                    break;
                }
            }
        }
    }
    best.map(|(sim, _, bbox)| (sim, bbox))
}

fn eval_band(
    ctx: &PageCtx,
    targets: &[Target],
    y_lo: f64,
    y_hi: f64,
    include_hi: bool,
) -> BackcalcResult {
    let band: Vec<&CtxWord> = ctx
        .words
        .iter()
        .filter(|w| {
            w.center_y >= y_lo && (w.center_y < y_hi || (include_hi && w.center_y <= y_hi))
        })
        .collect();
    let mut score = 0.0;
    let mut key_bbox_map = BTreeMap::new();
    for target in targets {
        match best_window(&band, target) {
            Some((sim, bbox)) => {
                score += sim;
                key_bbox_map.insert(target.key.clone(), Some(bbox));
            }
            None => {
                key_bbox_map.insert(target.key.clone(), None);
            }
        }
    }
    BackcalcResult {
        score,
        key_bbox_map,
    }
}

/// Backcalculates bounding boxes for a key-value extraction over the words
/// whose bbox vertical center lies in `[y_lo, y_hi]` (both ends inclusive).
/// Pass `y_lo = 0` and `y_hi = page height` to use the whole page.
pub fn backcalc_kie(
    kv: &KvMap,
    page: &OcrPage,
    y_lo: f64,
    y_hi: f64,
) -> Result<BackcalcResult, BackcalcError> {
    if y_lo.is_nan() || y_hi.is_nan() || y_lo > y_hi {
        return Err(BackcalcError::InvalidBand { y_lo, y_hi });
    }
    let ctx = PageCtx::new(page);
    let targets = targets_of(kv);
    Ok(eval_band(&ctx, &targets, y_lo, y_hi, true))
}

/// Evaluates one grid band with the partition semantics: band
/// `lo..hi` on the `scale_n`-level grid, half-open unless `hi == scale_n`
/// (the page bottom), which is inclusive.
pub fn backcalc_band(
    kv: &KvMap,
    page: &OcrPage,
    scale_n: u32,
    lo: u32,
    hi: u32,
) -> Result<BackcalcResult, BackcalcError> {
    validate_scale(scale_n)?;
    if lo > hi || hi > scale_n {
        return Err(BackcalcError::InvalidGridBand { lo, hi, scale_n });
    }
    let ctx = PageCtx::new(page);
    let targets = targets_of(kv);
    let step = ctx.height_px / f64::from(scale_n);
    Ok(eval_band(
        &ctx,
        &targets,
        f64::from(lo) * step,
        f64::from(hi) * step,
        hi == scale_n,
    ))
}

// ---------------------------------------------------------------------------
// Vertical partitioning
// ---------------------------------------------------------------------------

struct PartitionProblem<'a> {
    ctx: PageCtx,
    targets: Vec<Vec<Target>>,
    scale_n: u32,
    step: f64,
    evals: u64,
    _page: &'a OcrPage,
}

impl<'a> PartitionProblem<'a> {
    fn new(rows: &[KvMap], page: &'a OcrPage, scale_n: u32) -> Self {
        let ctx = PageCtx::new(page);
        let step = ctx.height_px / f64::from(scale_n);
        PartitionProblem {
            ctx,
            targets: rows.iter().map(targets_of).collect(),
            scale_n,
            step,
            evals: 0,
            _page: page,
        }
    }

    fn band_result(&self, item: usize, lo: u32, hi: u32) -> BackcalcResult {
        eval_band(
            &self.ctx,
            &self.targets[item],
            f64::from(lo) * self.step,
            f64::from(hi) * self.step,
            hi == self.scale_n,
        )
    }

    fn band_score(&mut self, item: usize, lo: u32, hi: u32) -> f64 {
        self.evals += 1;
        self.band_result(item, lo, hi).score
    }
}

/// Divides the page vertically into one band per line item, maximizing the
/// summed band scores over boundaries on the `scale_n`-unit grid.
///
/// Both strategies return the same total; they differ in how many band
/// evaluations the search performs. Ties between equal-scoring splits are
/// broken toward the smallest split point, which keeps the output
/// deterministic and is what the divide-and-conquer recursion assumes.
pub fn partition_line_items(
    rows: &[KvMap],
    page: &OcrPage,
    scale_n: u32,
    strategy: PartitionStrategy,
) -> Result<Partition, BackcalcError> {
    partition_with_stats(rows, page, scale_n, strategy).map(|(p, _)| p)
}

/// [`partition_line_items`] plus search-effort counters.
#[allow(clippy::needless_range_loop)]
pub fn partition_with_stats(
    rows: &[KvMap],
    page: &OcrPage,
    scale_n: u32,
    strategy: PartitionStrategy,
) -> Result<(Partition, PartitionStats), BackcalcError> {
    if rows.is_empty() {
        return Err(BackcalcError::EmptyTable);
    }
    validate_scale(scale_n)?;
    let item_count = rows.len();
    let levels = scale_n as usize + 1;
    let mut problem = PartitionProblem::new(rows, page, scale_n);

    // dp[layer][y]: best score for the first `layer` items in grid rows
    // [0, y); split[layer][y] is the smallest maximizing boundary.
    let mut dp = vec![vec![0.0f64; levels]; item_count + 1];
    let mut split = vec![vec![0u32; levels]; item_count + 1];

    // The first band always starts at the page top.
    for y in 0..levels {
        dp[1][y] = problem.band_score(0, 0, y as u32);
        split[1][y] = 0;
    }

    for layer in 2..=item_count {
        let (prev_slice, cur_slice) = dp.split_at_mut(layer);
        let prev = &prev_slice[layer - 1];
        let cur = &mut cur_slice[0];
        let arg = &mut split[layer];
        match strategy {
            PartitionStrategy::Naive => {
                for y in 0..levels {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_split = 0u32;
                    for s in 0..=y {
                        let v = prev[s] + problem.band_score(layer - 1, s as u32, y as u32);
                        if v > best {
                            best = v;
                            best_split = s as u32;
                        }
                    }
                    cur[y] = best;
                    arg[y] = best_split;
                }
            }
            PartitionStrategy::Dc => {
                dc_layer(
                    &mut problem,
                    layer - 1,
                    prev,
                    cur,
                    arg,
                    0,
                    levels - 1,
                    0,
                    levels - 1,
                );
            }
        }
    }

    // Recover boundaries from the split table; the last boundary is pinned
    // to the page bottom.
    let mut boundaries = vec![0u32; item_count + 1];
    boundaries[item_count] = scale_n;
    for layer in (1..=item_count).rev() {
        boundaries[layer - 1] = split[layer][boundaries[layer] as usize];
    }

    let per_item: Vec<BackcalcResult> = (0..item_count)
        .map(|i| problem.band_result(i, boundaries[i], boundaries[i + 1]))
        .collect();
    let total_score = per_item.iter().map(|r| r.score).sum();

    let stats = PartitionStats {
        band_evals: problem.evals,
    };
    Ok((
        Partition {
            boundaries,
            per_item,
            total_score,
            scale_n,
        },
        stats,
    ))
}

/// Fills `dp[y]` for `y` in `[y_lo, y_hi]` given that the optimal (smallest)
/// split for those states lies in `[s_lo, s_hi]`.
#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
fn dc_layer(
    problem: &mut PartitionProblem<'_>,
    item: usize,
    prev: &[f64],
    cur: &mut [f64],
    arg: &mut [u32],
    y_lo: usize,
    y_hi: usize,
    s_lo: usize,
    s_hi: usize,
) {
    if y_lo > y_hi {
        return;
    }
    let mid = y_lo + (y_hi - y_lo) / 2;
    let mut best = f64::NEG_INFINITY;
    let mut best_split = s_lo;
    for s in s_lo..=s_hi.min(mid) {
        let v = prev[s] + problem.band_score(item, s as u32, mid as u32);
        if v > best {
            best = v;
            best_split = s;
        }
    }
    cur[mid] = best;
    arg[mid] = best_split as u32;
    if mid > y_lo {
        dc_layer(problem, item, prev, cur, arg, y_lo, mid - 1, s_lo, best_split);
    }
    if mid < y_hi {
        dc_layer(problem, item, prev, cur, arg, mid + 1, y_hi, best_split, s_hi);
    }
}

/// Tightens a partition's outermost bounds: binary-searches the largest
/// first boundary and the smallest last boundary that leave the first and
/// last items' scores unchanged, relying on score monotonicity under band
/// shrinking. All per-item scores are identical before and after, and the
/// operation is idempotent.
pub fn tighten_bounds(partition: &Partition, rows: &[KvMap], page: &OcrPage) -> Partition {
    assert_eq!(
        rows.len() + 1,
        partition.boundaries.len(),
        "partition does not match the row count"
    );
    assert_eq!(
        rows.len(),
        partition.per_item.len(),
        "partition does not match the row count"
    );
    let item_count = rows.len();
    let mut problem = PartitionProblem::new(rows, page, partition.scale_n);
    let mut boundaries = partition.boundaries.clone();

    // Largest first boundary keeping item 0's score.
    let first_score = partition.per_item[0].score;
    let upper = boundaries[1];
    let mut lo = boundaries[0];
    let mut hi = upper;
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if problem.band_score(0, mid, upper) == first_score {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    boundaries[0] = lo;

    // Smallest last boundary keeping the last item's score.
    let last = item_count - 1;
    let last_score = partition.per_item[last].score;
    let lower = boundaries[last];
    let mut lo = lower;
    let mut hi = boundaries[last + 1];
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if problem.band_score(last, lower, mid) == last_score {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    boundaries[last + 1] = lo;

    let per_item: Vec<BackcalcResult> = (0..item_count)
        .map(|i| problem.band_result(i, boundaries[i], boundaries[i + 1]))
        .collect();
    let total_score = per_item.iter().map(|r| r.score).sum();
    Partition {
        boundaries,
        per_item,
        total_score,
        scale_n: partition.scale_n,
    }
}
