//! Line-item and key-value extraction metrics.
//!
//! GLIRM scores a predicted line-item table against the ground truth using
//! the order-preserving alignment: the matched score `S` is divided by the
//! predicted-side count for precision and the truth-side count for recall.
//! Denominators count cells carrying the scored facet by default; a `rows`
//! normalization divides by row counts instead for the literal reading,
//! which can exceed 1.0 on multi-column tables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::align_rows;
use crate::geometry::BBox;
use crate::model::{KieExtraction, LineItemTable};
use crate::similarity::{eval_similarity, Facet, SimilarityMeasure};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("beta must be a positive finite number, got {0}")]
    InvalidBeta(f64),
}

/// What the precision/recall denominators count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Cells carrying the scored facet (default; keeps scores in `[0, 1]`).
    Cells,
    /// Row counts (the literal formula; may exceed 1.0 on wide tables).
    Rows,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::Cells => write!(f, "cells"),
            Normalization::Rows => write!(f, "rows"),
        }
    }
}

/// GLIRM scores for one table pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlirmReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fbeta: f64,
    pub beta: f64,
    /// Sum of row scores over the aligned pairs.
    pub matched_score: f64,
    pub pred_cells: usize,
    pub truth_cells: usize,
    pub normalization: Normalization,
}

/// Key-information-extraction scores for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KieReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Per-field outcome over the union of predicted and truth keys: `true`
    /// iff the key is present on both sides and scores at or above the
    /// threshold.
    pub fields: BTreeMap<String, bool>,
}

/// Computes GLIRM precision, recall, F1, and Fβ for a predicted table
/// against the ground truth.
///
/// `S` is the total of the order-preserving alignment under `measure`;
/// precision divides by the predicted-side denominator, recall by the
/// truth-side one, and `Fβ = (1 + β²)·P·R / (β²·P + R)` weights recall β
/// times as heavily as precision. When both denominators are zero every
/// score is vacuously 1.0; when exactly one side is empty every score is
/// 0.0.
pub fn glirm(
    measure: &SimilarityMeasure,
    pred: &LineItemTable,
    truth: &LineItemTable,
    beta: f64,
    facet: Facet,
    normalization: Normalization,
) -> Result<GlirmReport, MetricsError> {
    if beta.is_nan() || beta <= 0.0 || !beta.is_finite() {
        return Err(MetricsError::InvalidBeta(beta));
    }
    let pred_cells = pred.cell_count(facet);
    let truth_cells = truth.cell_count(facet);
    let (pred_den, truth_den) = match normalization {
        Normalization::Cells => (pred_cells, truth_cells),
        Normalization::Rows => (pred.rows.len(), truth.rows.len()),
    };

    let (precision, recall, f1, matched_score) = if pred_den == 0 && truth_den == 0 {
        (1.0, 1.0, 1.0, 0.0)
    } else if pred_den == 0 || truth_den == 0 {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let matched = align_rows(measure, pred, truth).total;
        let p = matched / pred_den as f64;
        let r = matched / truth_den as f64;
        let f1 = 2.0 * matched / (pred_den + truth_den) as f64;
        (p, r, f1, matched)
    };

    let fbeta = if beta == 1.0 {
        f1
    } else {
        let b2 = beta * beta;
        let den = b2 * precision + recall;
        if den == 0.0 {
            0.0
        } else {
            (1.0 + b2) * precision * recall / den
        }
    };

    Ok(GlirmReport {
        precision,
        recall,
        f1,
        fbeta,
        beta,
        matched_score,
        pred_cells,
        truth_cells,
        normalization,
    })
}

/// Field-level KIE F1: a predicted field is a true positive iff its key
/// exists in the truth and the cell similarity reaches `threshold`.
/// Precision divides by the predicted field count, recall by the truth
/// field count. Both sides empty scores vacuously 1.0.
pub fn kie_f1(
    pred: &KieExtraction,
    truth: &KieExtraction,
    measure: &SimilarityMeasure,
    threshold: f64,
) -> KieReport {
    let mut fields = BTreeMap::new();
    let mut true_positives = 0usize;
    for (key, pred_cell) in &pred.fields {
        let correct = truth.fields.get(key).is_some_and(|truth_cell| {
            eval_similarity(measure, pred_cell, truth_cell).unwrap_or(0.0) >= threshold
        });
        if correct {
            true_positives += 1;
        }
        fields.insert(key.clone(), correct);
    }
    for key in truth.fields.keys() {
        fields.entry(key.clone()).or_insert(false);
    }

    let (precision, recall) = if pred.fields.is_empty() && truth.fields.is_empty() {
        (1.0, 1.0)
    } else if pred.fields.is_empty() || truth.fields.is_empty() {
        (0.0, 0.0)
    } else {
        (
            true_positives as f64 / pred.fields.len() as f64,
            true_positives as f64 / truth.fields.len() as f64,
        )
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    KieReport {
        precision,
        recall,
        f1,
        fields,
    }
}

/// Information coverage score: the fraction of the truth region covered by
/// the predicted region, `area(pred ∩ truth) / area(truth)`. Zero when the
/// truth region has zero area.
pub fn ics(pred_region: &BBox, truth_region: &BBox) -> f64 {
    let truth_area = truth_region.area();
    if truth_area <= 0.0 {
        return 0.0;
    }
    let inter = pred_region
        .intersection(truth_region)
        .map_or(0.0, |b| b.area());
    inter / truth_area
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::bipartite_match;
    use crate::model::{Cell, LineItem};
    use proptest::prelude::*;

    fn row(pairs: &[(&str, &str)]) -> LineItem {
        LineItem {
            cells: pairs
                .iter()
                .map(|(k, v)| (k.to_string(), Cell::text(*v)))
                .collect(),
        }
    }

    fn swap_fixture() -> (LineItemTable, LineItemTable) {
        let truth = LineItemTable::new(vec![
            row(&[("desc", "apple"), ("qty", "1")]),
            row(&[("desc", "banana"), ("qty", "2")]),
        ]);
        let pred = LineItemTable::new(vec![truth.rows[1].clone(), truth.rows[0].clone()]);
        (pred, truth)
    }

    fn glirm_default(pred: &LineItemTable, truth: &LineItemTable, beta: f64) -> GlirmReport {
        glirm(
            &SimilarityMeasure::exact(),
            pred,
            truth,
            beta,
            Facet::Content,
            Normalization::Cells,
        )
        .unwrap()
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let t = LineItemTable::new(vec![
            row(&[("desc", "apple"), ("qty", "1")]),
            row(&[("desc", "banana")]),
        ]);
        let report = glirm_default(&t, &t, 1.0);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.fbeta, 1.0);
    }

    #[test]
    fn swapped_rows_halve_f1_but_not_bipartite() {
        // Frozen from the brute-force subsequence and matching oracles:
        // order preservation admits one pair (S = 2), the unordered
        // matching both (S = 4), over 4 + 4 cells.
        let (pred, truth) = swap_fixture();
        let report = glirm_default(&pred, &truth, 1.0);
        assert_eq!(report.matched_score, 2.0);
        assert_eq!(report.pred_cells, 4);
        assert_eq!(report.truth_cells, 4);
        assert_eq!(report.f1, 0.5);

        let matching = bipartite_match(&SimilarityMeasure::exact(), &pred, &truth);
        let bipartite_f1 = 2.0 * matching.total / 8.0;
        assert_eq!(bipartite_f1, 1.0);
    }

    #[test]
    fn fbeta_favors_recall() {
        // S=2, pred_cells=4, truth_cells=2, beta=2: P=0.5, R=1.0, F1=2/3,
        // Fbeta=(1+4)*0.5*1.0/(4*0.5+1.0)=5/6. Cross-checked against the
        // direct form (1+b^2)*S/(b^2*truth+pred) = 10/12.
        let truth = LineItemTable::new(vec![row(&[("a", "x"), ("b", "y")])]);
        let pred = LineItemTable::new(vec![row(&[("a", "x"), ("b", "y"), ("c", "z"), ("d", "w")])]);
        let report = glirm_default(&pred, &truth, 2.0);
        assert_eq!(report.matched_score, 2.0);
        assert_eq!(report.precision, 0.5);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.f1, 2.0 / 3.0);
        assert_eq!(report.fbeta, 5.0 / 6.0);
    }

    #[test]
    fn empty_conventions() {
        let empty = LineItemTable::default();
        let nonempty = LineItemTable::new(vec![row(&[("a", "x")])]);
        let both = glirm_default(&empty, &empty, 1.0);
        assert_eq!((both.precision, both.recall, both.f1, both.fbeta), (1.0, 1.0, 1.0, 1.0));
        let one = glirm_default(&empty, &nonempty, 1.0);
        assert_eq!((one.precision, one.recall, one.f1, one.fbeta), (0.0, 0.0, 0.0, 0.0));
        let other = glirm_default(&nonempty, &empty, 1.0);
        assert_eq!(other.f1, 0.0);
    }

    #[test]
    fn invalid_beta_rejected() {
        let t = LineItemTable::default();
        for beta in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(glirm(
                &SimilarityMeasure::exact(),
                &t,
                &t,
                beta,
                Facet::Content,
                Normalization::Cells
            )
            .is_err());
        }
    }

    #[test]
    fn rows_normalization_uses_row_counts() {
        let (pred, truth) = swap_fixture();
        let report = glirm(
            &SimilarityMeasure::exact(),
            &pred,
            &truth,
            1.0,
            Facet::Content,
            Normalization::Rows,
        )
        .unwrap();
        // S = 2 over 2 + 2 rows.
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.pred_cells, 4);
    }

    #[test]
    fn kie_identical_maps_score_one() {
        let kie = KieExtraction {
            fields: [
                ("a".to_string(), Cell::text("1")),
                ("b".to_string(), Cell::text("2")),
                ("c".to_string(), Cell::text("3")),
            ]
            .into_iter()
            .collect(),
        };
        let report = kie_f1(&kie, &kie, &SimilarityMeasure::exact(), 1.0);
        assert_eq!(report.f1, 1.0);
        assert!(report.fields.values().all(|&v| v));
    }

    #[test]
    fn kie_half_correct() {
        let truth = KieExtraction {
            fields: [
                ("a".to_string(), Cell::text("1")),
                ("b".to_string(), Cell::text("2")),
            ]
            .into_iter()
            .collect(),
        };
        let pred = KieExtraction {
            fields: [
                ("a".to_string(), Cell::text("1")),
                ("z".to_string(), Cell::text("9")),
            ]
            .into_iter()
            .collect(),
        };
        let report = kie_f1(&pred, &truth, &SimilarityMeasure::exact(), 1.0);
        assert_eq!(report.precision, 0.5);
        assert_eq!(report.recall, 0.5);
        assert_eq!(report.f1, 0.5);
    }

    #[test]
    fn kie_empty_pred_scores_zero() {
        let truth = KieExtraction {
            fields: [("a".to_string(), Cell::text("1"))].into_iter().collect(),
        };
        let report = kie_f1(
            &KieExtraction::default(),
            &truth,
            &SimilarityMeasure::exact(),
            1.0,
        );
        assert_eq!(report.f1, 0.0);
    }

    #[test]
    fn ics_examples() {
        let truth = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        assert_eq!(ics(&truth, &truth), 1.0);
        let disjoint = BBox::new(20.0, 20.0, 30.0, 30.0).unwrap();
        assert_eq!(ics(&disjoint, &truth), 0.0);
        // Left half of the truth region: 50 / 100.
        let half = BBox::new(0.0, 0.0, 5.0, 10.0).unwrap();
        assert_eq!(ics(&half, &truth), 0.5);
        let degenerate = BBox::new(0.0, 0.0, 0.0, 10.0).unwrap();
        assert_eq!(ics(&truth, &degenerate), 0.0);
    }

    #[test]
    fn location_facet_scores_boxes_in_isolation() {
        use crate::geometry::BBox;
        let boxed = |x0: f64| Cell::boxed(BBox::new(x0, 0.0, x0 + 10.0, 10.0).unwrap());
        let truth = LineItemTable::new(vec![LineItem {
            cells: [("a".to_string(), boxed(0.0)), ("b".to_string(), boxed(20.0))]
                .into_iter()
                .collect(),
        }]);
        let report = glirm(
            &SimilarityMeasure::iou(),
            &truth,
            &truth,
            1.0,
            Facet::Location,
            Normalization::Cells,
        )
        .unwrap();
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.pred_cells, 2);

        // A half-overlapping prediction earns exactly the IoU credit:
        // boxes shifted by half their width give IoU 1/3.
        let pred = LineItemTable::new(vec![LineItem {
            cells: [("a".to_string(), boxed(5.0)), ("b".to_string(), boxed(25.0))]
                .into_iter()
                .collect(),
        }]);
        let report = glirm(
            &SimilarityMeasure::iou(),
            &pred,
            &truth,
            1.0,
            Facet::Location,
            Normalization::Cells,
        )
        .unwrap();
        assert_eq!(report.matched_score, 2.0 / 3.0);
        assert_eq!(report.f1, (2.0 * (2.0 / 3.0)) / 4.0);
    }

    #[test]
    fn fbeta_is_monotone_in_beta_when_recall_exceeds_precision() {
        // S=2 over pred 4 / truth 2 cells: P=0.5 < R=1.0.
        let truth = LineItemTable::new(vec![row(&[("a", "x"), ("b", "y")])]);
        let pred = LineItemTable::new(vec![row(&[("a", "x"), ("b", "y"), ("c", "z"), ("d", "w")])]);
        let mut last = f64::MIN;
        for beta in [0.25, 0.5, 1.0, 2.0, 4.0, 16.0, 64.0, 1000.0] {
            let report = glirm_default(&pred, &truth, beta);
            assert!(
                report.fbeta >= last,
                "fbeta decreased at beta={beta}: {} < {last}",
                report.fbeta
            );
            last = report.fbeta;
        }
        // And the limit is recall.
        assert!((last - 1.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn scores_stay_in_unit_range_under_cells_normalization(
            rows_p in proptest::collection::vec(
                proptest::collection::btree_map("[a-c]", "[a-d]{0,2}", 0..4), 0..5),
            rows_t in proptest::collection::vec(
                proptest::collection::btree_map("[a-c]", "[a-d]{0,2}", 0..4), 0..5),
            beta in 0.25f64..4.0,
        ) {
            let to_table = |rows: Vec<std::collections::BTreeMap<String, String>>| {
                LineItemTable::new(
                    rows.into_iter()
                        .map(|cells| LineItem {
                            cells: cells.into_iter().map(|(k, v)| (k, Cell::text(v))).collect(),
                        })
                        .collect(),
                )
            };
            let (pred, truth) = (to_table(rows_p), to_table(rows_t));
            for measure in [SimilarityMeasure::exact(), SimilarityMeasure::edit()] {
                let r = glirm(&measure, &pred, &truth, beta, Facet::Content, Normalization::Cells)
                    .unwrap();
                for v in [r.precision, r.recall, r.f1, r.fbeta] {
                    prop_assert!((0.0..=1.0).contains(&v), "out of range: {:?}", r);
                }
            }
        }
    }
}
