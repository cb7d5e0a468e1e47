//! Per-document report records, corpus aggregates, and emitters.
//!
//! Reports embed the resolved run configuration so results are
//! reproducible, list documents sorted by identifier, and aggregate each
//! numeric metric as `{count, mean, median}` over the documents that
//! scored. JSON is the primary format; CSV carries the configuration and
//! aggregates as `#`-prefixed comment lines. The ablation emitter renders
//! (configuration flags, score) rows as a unicode check/cross table sorted
//! by descending score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::align::AlignmentResult;
use crate::metrics::{GlirmReport, KieReport};

/// One evaluated document: exactly one of the score fields is set, or
/// `error` when the document could not be processed. `alignment` carries
/// the diagnostic row-alignment dump when requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glirm: Option<GlirmReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kie: Option<KieReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregate statistics for one metric over the scored documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
}

/// A full corpus report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    /// The resolved run configuration, echoed for reproducibility.
    pub config: serde_json::Value,
    /// Per-document records, sorted by identifier.
    pub documents: Vec<DocumentRecord>,
    /// Per-metric aggregates over documents that scored.
    pub aggregate: BTreeMap<String, MetricSummary>,
    /// Number of documents that failed to process.
    pub errors: usize,
}

impl CorpusReport {
    /// Builds a report from per-document records: sorts by identifier and
    /// aggregates every metric present.
    pub fn build(config: serde_json::Value, mut documents: Vec<DocumentRecord>) -> Self {
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        let mut series: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut errors = 0usize;
        for doc in &documents {
            if doc.error.is_some() {
                errors += 1;
            }
            if let Some(g) = &doc.glirm {
                series.entry("precision").or_default().push(g.precision);
                series.entry("recall").or_default().push(g.recall);
                series.entry("f1").or_default().push(g.f1);
                series.entry("fbeta").or_default().push(g.fbeta);
            }
            if let Some(k) = &doc.kie {
                series.entry("precision").or_default().push(k.precision);
                series.entry("recall").or_default().push(k.recall);
                series.entry("f1").or_default().push(k.f1);
            }
        }
        let aggregate = series
            .into_iter()
            .map(|(name, values)| (name.to_string(), summarize(&values)))
            .collect();
        CorpusReport {
            config,
            documents,
            aggregate,
            errors,
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        out.push('\n');
        out
    }

    /// CSV emission: config and aggregates as comment lines, then one row
    /// per document.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# config: {}\n",
            serde_json::to_string(&self.config).expect("config serialization cannot fail")
        ));
        for (name, summary) in &self.aggregate {
            out.push_str(&format!(
                "# aggregate {name}: count={} mean={} median={}\n",
                summary.count, summary.mean, summary.median
            ));
        }
        out.push_str("id,precision,recall,f1,fbeta,error\n");
        for doc in &self.documents {
            let (p, r, f1, fb) = if let Some(g) = &doc.glirm {
                (
                    g.precision.to_string(),
                    g.recall.to_string(),
                    g.f1.to_string(),
                    g.fbeta.to_string(),
                )
            } else if let Some(k) = &doc.kie {
                (
                    k.precision.to_string(),
                    k.recall.to_string(),
                    k.f1.to_string(),
                    String::new(),
                )
            } else {
                (String::new(), String::new(), String::new(), String::new())
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&doc.id),
                p,
                r,
                f1,
                fb,
                csv_field(doc.error.as_deref().unwrap_or(""))
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `{count, mean, median}` of a series; zeros for an empty series.
pub fn summarize(values: &[f64]) -> MetricSummary {
    if values.is_empty() {
        return MetricSummary {
            count: 0,
            mean: 0.0,
            median: 0.0,
        };
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    MetricSummary {
        count: values.len(),
        mean,
        median,
    }
}

/// One ablation row: which toggles were on, and the resulting score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub flags: Vec<bool>,
    pub score: f64,
}

/// Renders (flags, score) rows as a text table with check/cross marks,
/// sorted by descending score. `flag_names` labels the columns.
pub fn render_ablation_table(flag_names: &[&str], rows: &[AblationRow], score_name: &str) -> String {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].score.total_cmp(&rows[a].score).then(a.cmp(&b)));

    let mut out = String::new();
    let header: Vec<String> = flag_names
        .iter()
        .map(|s| s.to_string())
        .chain(std::iter::once(score_name.to_string()))
        .collect();
    let widths: Vec<usize> = header.iter().map(|h| h.chars().count().max(7)).collect();
    for (h, w) in header.iter().zip(&widths) {
        out.push_str(&format!("| {h:w$} "));
    }
    out.push_str("|\n");
    for w in &widths {
        out.push_str(&format!("|{}", "-".repeat(w + 2)));
    }
    out.push_str("|\n");
    for idx in order {
        let row = &rows[idx];
        for (flag, w) in row.flags.iter().zip(&widths) {
            let mark = if *flag { "\u{2713}" } else { "\u{2717}" };
            out.push_str(&format!("| {mark:w$} "));
        }
        let w = widths[widths.len() - 1];
        out.push_str(&format!("| {:>w$} |\n", format!("{:.2}%", row.score * 100.0)));
    }
    out
}
