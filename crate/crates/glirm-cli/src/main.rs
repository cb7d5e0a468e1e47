//! Batch evaluation front-end for business-document extraction outputs.
//!
//! Exit codes: 0 success, 1 lint findings, 2 input error, 3 internal
//! error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use glirm::metrics::Normalization;
use glirm::model::ExtractionKind;
use glirm::similarity::Facet;
use glirm::PartitionStrategy;
use glirm_cli::config::{OutputFormat, RunConfig, Task, CONFIG_ENV_VAR};
use glirm_cli::tasks::{self, CliError};

#[derive(Parser)]
#[command(
    name = "glirm",
    version,
    about = "Evaluate document-extraction outputs: line-item and key-value scoring, \
             bounding-box backcalculation, page retrieval, layout prompts, schema linting"
)]
struct Cli {
    /// Config file path; defaults to $GLIRM_CONFIG when set. Flags override
    /// file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score key-value extractions listed in a corpus manifest.
    EvalKie {
        /// JSON-lines manifest: {"id", "pred", "gt"} per line.
        manifest: PathBuf,
        #[command(flatten)]
        opts: EvalOpts,
    },
    /// Score line-item tables listed in a corpus manifest.
    EvalLir {
        /// JSON-lines manifest: {"id", "pred", "gt"} per line.
        manifest: PathBuf,
        #[command(flatten)]
        opts: EvalOpts,
    },
    /// Backcalculate bounding boxes for an extraction against OCR words.
    Backcalc {
        /// OCR document file.
        #[arg(long)]
        ocr: PathBuf,
        /// Extraction file (KIE or LIR).
        #[arg(long)]
        extraction: PathBuf,
        /// Extraction kind; sniffed from the file when omitted.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Page index the extraction refers to.
        #[arg(long, default_value_t = 0)]
        page: usize,
        /// Vertical grid resolution for line-item partitioning.
        #[arg(long)]
        scale_n: Option<u32>,
        /// Partitioning strategy.
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        /// Tighten the outer partition bounds by binary search.
        #[arg(long)]
        tighten: bool,
        /// Write the enriched extraction here (summary goes to stdout);
        /// default prints the extraction to stdout and the summary to
        /// stderr.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build or query a wavelet-hash page index.
    Retrieve {
        #[command(subcommand)]
        action: RetrieveAction,
    },
    /// Render an OCR document as a layout-preserving text prompt.
    Prompt {
        /// OCR document file.
        ocr: PathBuf,
        /// Pixels per character cell; defaults to each page's median word
        /// height.
        #[arg(long)]
        char_cell_px: Option<f64>,
    },
    /// Lint a structured-output schema, optionally against sample outputs.
    /// Exits 1 when findings exist.
    LintSchema {
        /// Schema document (JSON).
        schema: PathBuf,
        /// JSON-lines file of sample model outputs.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Convert a dataset-style annotation record into evaluation formats.
    Ingest {
        /// Annotation record (JSON with "field_extractions").
        record: PathBuf,
        /// Field-name remap config (JSON: {"field_map": {...}}).
        #[arg(long)]
        remap: Option<PathBuf>,
        /// Page width in pixels for scaling normalized bboxes.
        #[arg(long, requires = "page_height")]
        page_width: Option<u32>,
        /// Page height in pixels for scaling normalized bboxes.
        #[arg(long, requires = "page_width")]
        page_height: Option<u32>,
        /// Write the key-value extraction here.
        #[arg(long)]
        out_kie: Option<PathBuf>,
        /// Write the line-item table here.
        #[arg(long)]
        out_lir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RetrieveAction {
    /// Hash every image in a directory into an index file.
    Index {
        /// Directory of page images (png/ppm/pgm/pbm).
        #[arg(long)]
        images: PathBuf,
        /// Index file to write; default stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Hash band side; the hash has this many bits squared.
        #[arg(long)]
        hash_size: Option<u32>,
        /// Haar decomposition levels.
        #[arg(long)]
        hash_levels: Option<u32>,
    },
    /// Rank indexed pages by distance to a query image.
    Query {
        /// Index file produced by `retrieve index`.
        #[arg(long)]
        index: PathBuf,
        /// Query image.
        #[arg(long)]
        image: PathBuf,
        /// Number of neighbors to return.
        #[arg(short, long)]
        k: Option<usize>,
    },
}

#[derive(Args)]
struct EvalOpts {
    /// Similarity measure: exact, edit, or iou.
    #[arg(long)]
    measure: Option<String>,
    /// Compare raw text without normalization.
    #[arg(long)]
    no_normalize: bool,
    /// Recall weight for the Fβ score.
    #[arg(long)]
    beta: Option<f64>,
    /// Denominator mode.
    #[arg(long, value_enum)]
    normalization: Option<NormalizationArg>,
    /// Scored facet; defaults to the measure's facet.
    #[arg(long, value_enum)]
    facet: Option<FacetArg>,
    /// Similarity threshold for a KIE true positive.
    #[arg(long)]
    threshold: Option<f64>,
    /// Embed the diagnostic row alignment (pairs and scores) per document.
    #[arg(long)]
    dump_alignment: bool,
    /// Report file; default stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Abort on the first per-document failure.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizationArg {
    Cells,
    Rows,
}

#[derive(Clone, Copy, ValueEnum)]
enum FacetArg {
    Content,
    Location,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Naive,
    Dc,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Kie,
    Lir,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<NormalizationArg> for Normalization {
    fn from(value: NormalizationArg) -> Self {
        match value {
            NormalizationArg::Cells => Normalization::Cells,
            NormalizationArg::Rows => Normalization::Rows,
        }
    }
}

impl From<FacetArg> for Facet {
    fn from(value: FacetArg) -> Self {
        match value {
            FacetArg::Content => Facet::Content,
            FacetArg::Location => Facet::Location,
        }
    }
}

impl From<StrategyArg> for PartitionStrategy {
    fn from(value: StrategyArg) -> Self {
        match value {
            StrategyArg::Naive => PartitionStrategy::Naive,
            StrategyArg::Dc => PartitionStrategy::Dc,
        }
    }
}

impl From<KindArg> for ExtractionKind {
    fn from(value: KindArg) -> Self {
        match value {
            KindArg::Kie => ExtractionKind::Kie,
            KindArg::Lir => ExtractionKind::Lir,
        }
    }
}

impl From<FormatArg> for OutputFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    });
}

fn load_base_config(flag: Option<&Path>) -> Result<RunConfig, CliError> {
    let path = match flag {
        Some(path) => Some(path.to_path_buf()),
        None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
    };
    match path {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let bytes = std::fs::read(&path).map_err(|e| {
                CliError::Input(anyhow::anyhow!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::from_json_slice(&bytes).map_err(|e| {
                CliError::Input(anyhow::anyhow!("config {}: {e}", path.display()))
            })
        }
    }
}

fn apply_eval_opts(cfg: &mut RunConfig, opts: &EvalOpts) {
    if let Some(measure) = &opts.measure {
        cfg.measure = Some(measure.clone());
    }
    if opts.no_normalize {
        cfg.normalize_text = false;
    }
    if let Some(beta) = opts.beta {
        cfg.beta = beta;
    }
    if let Some(normalization) = opts.normalization {
        cfg.normalization = normalization.into();
    }
    if let Some(facet) = opts.facet {
        cfg.facet = Some(facet.into());
    }
    if let Some(threshold) = opts.threshold {
        cfg.threshold = threshold;
    }
    if opts.dump_alignment {
        cfg.dump_alignment = true;
    }
    if let Some(out) = &opts.out {
        cfg.out = Some(out.clone());
    }
    if let Some(format) = opts.format {
        cfg.format = format.into();
    }
    if let Some(jobs) = opts.jobs {
        cfg.jobs = jobs;
    }
    if opts.strict {
        cfg.strict = true;
    }
}

fn run_eval(
    kind: ExtractionKind,
    task: Task,
    manifest: &Path,
    opts: &EvalOpts,
    config_flag: Option<&Path>,
) -> Result<i32, CliError> {
    let mut cfg = load_base_config(config_flag)?;
    cfg.task = Some(task);
    apply_eval_opts(&mut cfg, opts);
    let report = tasks::eval_corpus(kind, manifest, &cfg)?;
    tasks::write_output(cfg.out.as_deref(), &tasks::render_report(&report, &cfg))?;
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let config_flag = cli.config.as_deref();
    match cli.command {
        Command::EvalKie { manifest, opts } => {
            run_eval(ExtractionKind::Kie, Task::EvalKie, &manifest, &opts, config_flag)
        }
        Command::EvalLir { manifest, opts } => {
            run_eval(ExtractionKind::Lir, Task::EvalLir, &manifest, &opts, config_flag)
        }
        Command::Backcalc {
            ocr,
            extraction,
            kind,
            page,
            scale_n,
            strategy,
            tighten,
            out,
        } => {
            let mut cfg = load_base_config(config_flag)?;
            cfg.task = Some(Task::Backcalc);
            if let Some(scale_n) = scale_n {
                cfg.scale_n = scale_n;
            }
            if let Some(strategy) = strategy {
                cfg.strategy = strategy.into();
            }
            if tighten {
                cfg.tighten = true;
            }
            if let Some(out) = out {
                cfg.out = Some(out);
            }
            let outcome =
                tasks::run_backcalc(&ocr, &extraction, kind.map(Into::into), page, &cfg)?;
            let summary = serde_json::to_string_pretty(&outcome.summary)
                .expect("summary serialization cannot fail");
            match cfg.out.as_deref() {
                Some(path) => {
                    tasks::write_output(Some(path), &outcome.enriched_json)?;
                    println!("{summary}");
                }
                None => {
                    print!("{}", outcome.enriched_json);
                    eprintln!("{summary}");
                }
            }
            Ok(0)
        }
        Command::Retrieve { action } => match action {
            RetrieveAction::Index {
                images,
                out,
                hash_size,
                hash_levels,
            } => {
                let mut cfg = load_base_config(config_flag)?;
                cfg.task = Some(Task::Retrieve);
                if let Some(hash_size) = hash_size {
                    cfg.hash_size = hash_size;
                }
                if let Some(hash_levels) = hash_levels {
                    cfg.hash_levels = hash_levels;
                }
                let index = tasks::build_index(&images, &cfg)?;
                let mut json = serde_json::to_string_pretty(&index)
                    .expect("index serialization cannot fail");
                json.push('\n');
                tasks::write_output(out.as_deref(), &json)?;
                Ok(0)
            }
            RetrieveAction::Query { index, image, k } => {
                let cfg = load_base_config(config_flag)?;
                let k = k.unwrap_or(cfg.k);
                let ranked = tasks::query_index(&index, &image, k)?;
                let rows: Vec<serde_json::Value> = ranked
                    .into_iter()
                    .map(|(id, distance)| serde_json::json!({"id": id, "distance": distance}))
                    .collect();
                println!(
                    "{}",
                    serde_json::to_string_pretty(&rows).expect("serialization cannot fail")
                );
                Ok(0)
            }
        },
        Command::Prompt { ocr, char_cell_px } => {
            let cfg = load_base_config(config_flag)?;
            let cell = char_cell_px.or(cfg.char_cell_px);
            let text = tasks::render_prompts(&ocr, cell)?;
            println!("{text}");
            Ok(0)
        }
        Command::LintSchema { schema, samples } => {
            let findings = tasks::run_lint(&schema, samples.as_deref())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&findings).expect("serialization cannot fail")
            );
            Ok(if findings.is_empty() { 0 } else { 1 })
        }
        Command::Ingest {
            record,
            remap,
            page_width,
            page_height,
            out_kie,
            out_lir,
        } => {
            let page_size = page_width.zip(page_height);
            let (kie, lir) = tasks::run_ingest(&record, remap.as_deref(), page_size)?;
            match (&out_kie, &out_lir) {
                (None, None) => {
                    let combined = serde_json::json!({ "kie": kie, "lir": lir });
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&combined)
                            .expect("serialization cannot fail")
                    );
                }
                _ => {
                    if let Some(path) = &out_kie {
                        let mut json = serde_json::to_string_pretty(&kie)
                            .expect("serialization cannot fail");
                        json.push('\n');
                        tasks::write_output(Some(path), &json)?;
                    }
                    if let Some(path) = &out_lir {
                        let mut json = serde_json::to_string_pretty(&lir)
                            .expect("serialization cannot fail");
                        json.push('\n');
                        tasks::write_output(Some(path), &json)?;
                    }
                }
            }
            Ok(0)
        }
    }
}
