//! Run configuration: documented defaults, config-file loading, and the
//! reproducibility echo embedded in reports.
//!
//! Resolution order is defaults, then the config file (`--config` flag or
//! the `GLIRM_CONFIG` environment variable), then command-line flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use glirm::metrics::Normalization;
use glirm::similarity::Facet;
use glirm::PartitionStrategy;

/// Environment variable naming the default config file.
pub const CONFIG_ENV_VAR: &str = "GLIRM_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    EvalKie,
    EvalLir,
    Backcalc,
    Retrieve,
    Prompt,
    LintSchema,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// All run knobs with their defaults. Serialized config files round-trip;
/// absent keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Task being run; set from the subcommand.
    pub task: Option<Task>,
    /// Similarity measure name: `exact`, `edit`, or `iou`. Unset picks the
    /// task default (`exact` for KIE, `edit` for LIR).
    pub measure: Option<String>,
    /// Normalize text before comparison (default true).
    pub normalize_text: bool,
    /// Recall weight for the Fβ score (default 1.0).
    pub beta: f64,
    /// Denominator mode: `cells` (default) or `rows`.
    pub normalization: Normalization,
    /// Scored facet; unset derives it from the measure.
    pub facet: Option<Facet>,
    /// KIE true-positive similarity threshold (default 1.0).
    pub threshold: f64,
    /// Page-grid resolution for partitioning (default 128).
    pub scale_n: u32,
    /// Partitioning strategy (default `dc`).
    pub strategy: PartitionStrategy,
    /// Tighten the outer partition bounds (default false).
    pub tighten: bool,
    /// Wavelet-hash band side; the hash has `hash_size^2` bits (default 8).
    pub hash_size: u32,
    /// Haar decomposition levels (default 3).
    pub hash_levels: u32,
    /// Neighbors returned by retrieval queries (default 1).
    pub k: usize,
    /// Layout-prompt cell size in pixels; unset uses the page's median
    /// word height.
    pub char_cell_px: Option<f64>,
    /// Embed the diagnostic row-alignment dump (pairs and scores) in
    /// line-item reports (default false).
    pub dump_alignment: bool,
    /// Report format (default `json`).
    pub format: OutputFormat,
    /// Output path; unset writes to standard output.
    pub out: Option<PathBuf>,
    /// Worker count for corpus evaluation; 0 (default) uses all cores.
    pub jobs: usize,
    /// Abort on the first per-document failure instead of reporting it.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: None,
            measure: None,
            normalize_text: true,
            beta: 1.0,
            normalization: Normalization::Cells,
            facet: None,
            threshold: 1.0,
            scale_n: 128,
            strategy: PartitionStrategy::Dc,
            tighten: false,
            hash_size: 8,
            hash_levels: 3,
            k: 1,
            char_cell_px: None,
            dump_alignment: false,
            format: OutputFormat::Json,
            out: None,
            jobs: 0,
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        use serde::de::Error as _;
        let config: RunConfig = serde_json::from_slice(bytes)?;
        for (name, value) in [
            ("beta", Some(config.beta)),
            ("threshold", Some(config.threshold)),
            ("char_cell_px", config.char_cell_px),
        ] {
            if value.is_some_and(|v| !v.is_finite()) {
                return Err(serde_json::Error::custom(format!("{name} must be finite")));
            }
        }
        Ok(config)
    }

    /// The configuration echoed into reports: every semantic knob, but not
    /// the execution-only fields (`jobs`, `strict`, `out`), so reports are
    /// byte-identical across parallelism settings.
    pub fn echo(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serialization cannot fail");
        let obj = value.as_object_mut().expect("config is an object");
        obj.remove("jobs");
        obj.remove("strict");
        obj.remove("out");
        serde_json::Value::Object(std::mem::take(obj))
    }
}
