//! End-to-end checks of the CLI surface: subcommands, flags, config
//! resolution, exit codes, and output formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn glirm_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glirm"))
}

fn write(path: &Path, content: &str) {
    fs::write(path, content).unwrap();
}

fn swap_corpus(dir: &Path) -> std::path::PathBuf {
    write(
        &dir.join("gt.json"),
        r#"{"rows":[{"desc":{"value":"apple"},"qty":{"value":"1"}},{"desc":{"value":"banana"},"qty":{"value":"2"}}]}"#,
    );
    write(
        &dir.join("pred.json"),
        r#"{"rows":[{"desc":{"value":"banana"},"qty":{"value":"2"}},{"desc":{"value":"apple"},"qty":{"value":"1"}}]}"#,
    );
    let manifest = dir.join("manifest.jsonl");
    write(
        &manifest,
        "{\"id\":\"doc1\",\"pred\":\"pred.json\",\"gt\":\"gt.json\"}\n",
    );
    manifest
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn eval_lir_scores_swap_fixture_at_half() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = swap_corpus(dir.path());
    let output = glirm_bin()
        .args(["eval-lir", manifest.to_str().unwrap(), "--measure", "exact", "--beta", "2.0"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(report["documents"][0]["glirm"]["f1"], 0.5);
    assert_eq!(report["aggregate"]["f1"]["median"], 0.5);
    assert_eq!(report["config"]["beta"], 2.0);
}

#[test]
fn eval_lir_perfect_prediction_aggregates_at_one() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("table.json"),
        r#"{"rows":[{"desc":{"value":"apple"},"qty":{"value":"1"}}]}"#,
    );
    let manifest = dir.path().join("manifest.jsonl");
    write(
        &manifest,
        "{\"id\":\"d\",\"pred\":\"table.json\",\"gt\":\"table.json\"}\n",
    );
    let output = glirm_bin()
        .args(["eval-lir", manifest.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(report["aggregate"]["f1"]["mean"], 1.0);
    assert_eq!(report["documents"][0]["glirm"]["fbeta"], 1.0);
}

#[test]
fn eval_lir_dumps_alignment_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = swap_corpus(dir.path());
    let output = glirm_bin()
        .args([
            "eval-lir",
            manifest.to_str().unwrap(),
            "--measure",
            "exact",
            "--dump-alignment",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    let alignment = &report["documents"][0]["alignment"];
    // The swap fixture keeps exactly one ordered pair worth two cells.
    assert_eq!(alignment["pairs"], serde_json::json!([[0, 1]]));
    assert_eq!(alignment["pair_scores"], serde_json::json!([2.0]));
    assert_eq!(alignment["total"], 2.0);

    // Without the flag the field is absent.
    let output = glirm_bin()
        .args(["eval-lir", manifest.to_str().unwrap(), "--measure", "exact"])
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert!(report["documents"][0].get("alignment").is_none());
}

#[test]
fn eval_kie_scores_identical_fields_at_one() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("kie.json"),
        r#"{"fields":{"number":{"value":"12345"},"total":{"value":"9.99"}}}"#,
    );
    let manifest = dir.path().join("manifest.jsonl");
    write(
        &manifest,
        "{\"id\":\"d\",\"pred\":\"kie.json\",\"gt\":\"kie.json\"}\n",
    );
    let output = glirm_bin()
        .args(["eval-kie", manifest.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(report["documents"][0]["kie"]["f1"], 1.0);
}

#[test]
fn missing_manifest_exits_2_without_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let output = glirm_bin()
        .args([
            "eval-lir",
            dir.path().join("nope.jsonl").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists(), "no report may be written on input error");
}

#[test]
fn per_document_failures_reported_unless_strict() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("gt.json"), r#"{"rows":[]}"#);
    write(&dir.path().join("bad.json"), "not json");
    let manifest = dir.path().join("manifest.jsonl");
    write(
        &manifest,
        "{\"id\":\"bad\",\"pred\":\"bad.json\",\"gt\":\"gt.json\"}\n{\"id\":\"ok\",\"pred\":\"gt.json\",\"gt\":\"gt.json\"}\n",
    );

    let output = glirm_bin()
        .args(["eval-lir", manifest.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "non-strict run completes");
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(report["errors"], 1);
    assert!(report["documents"][0]["error"].is_string());
    assert_eq!(report["documents"][1]["glirm"]["f1"], 1.0);

    let strict = glirm_bin()
        .args(["eval-lir", manifest.to_str().unwrap(), "--strict"])
        .output()
        .unwrap();
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn csv_format_emits_rows() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = swap_corpus(dir.path());
    let output = glirm_bin()
        .args(["eval-lir", manifest.to_str().unwrap(), "--format", "csv"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.starts_with("# config:"));
    assert!(text.contains("id,precision,recall,f1,fbeta,error"));
    assert!(text.contains("doc1,0.5,0.5,0.5,0.5,"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = swap_corpus(dir.path());
    let config = dir.path().join("config.json");
    write(&config, r#"{"beta": 3.0, "measure": "exact"}"#);

    // Config file applies...
    let output = glirm_bin()
        .args(["eval-lir", manifest.to_str().unwrap()])
        .env("GLIRM_CONFIG", config.to_str().unwrap())
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(report["config"]["beta"], 3.0);

    // ...and flags override it.
    let output = glirm_bin()
        .args(["eval-lir", manifest.to_str().unwrap(), "--beta", "4.0"])
        .env("GLIRM_CONFIG", config.to_str().unwrap())
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(report["config"]["beta"], 4.0);
}

#[test]
fn backcalc_enriches_extraction() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("ocr.json"),
        r#"{"pages":[{"width":400,"height":200,"words":[
            {"text":"widget","bbox":[10,10,70,30],"reading_order":0},
            {"text":"10","bbox":[90,10,110,30],"reading_order":1},
            {"text":"gadget","bbox":[10,110,70,130],"reading_order":2},
            {"text":"20","bbox":[90,110,110,130],"reading_order":3}]}]}"#,
    );
    write(
        &dir.path().join("pred.json"),
        r#"{"rows":[{"desc":{"value":"widget"},"qty":{"value":"10"}},{"desc":{"value":"gadget"},"qty":{"value":"20"}}]}"#,
    );
    let out = dir.path().join("enriched.json");
    let output = glirm_bin()
        .args([
            "backcalc",
            "--ocr",
            dir.path().join("ocr.json").to_str().unwrap(),
            "--extraction",
            dir.path().join("pred.json").to_str().unwrap(),
            "--scale-n",
            "16",
            "--strategy",
            "naive",
            "--tighten",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(summary["kind"], "lir");
    assert_eq!(summary["score"], 4.0);

    let enriched: serde_json::Value =
        serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(
        enriched["rows"][0]["desc"]["bbox"],
        serde_json::json!([10.0, 10.0, 70.0, 30.0])
    );
    assert_eq!(
        enriched["rows"][1]["qty"]["bbox"],
        serde_json::json!([90.0, 110.0, 110.0, 130.0])
    );
}

#[test]
fn lint_schema_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.json");
    write(
        &clean,
        r#"{"type":"object","properties":{"a":{}},"required":["a"]}"#,
    );
    let status = glirm_bin()
        .args(["lint-schema", clean.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let dirty = dir.path().join("dirty.json");
    write(&dirty, r#"{"type":"object","properties":{"a":{}}}"#);
    let output = glirm_bin()
        .args(["lint-schema", dirty.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let findings: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(findings[0]["code"], "ALL_KEYS_OPTIONAL");

    let broken = dir.path().join("broken.json");
    write(&broken, "[]");
    let status = glirm_bin()
        .args(["lint-schema", broken.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn prompt_renders_layout() {
    let dir = tempfile::tempdir().unwrap();
    let ocr = dir.path().join("ocr.json");
    write(
        &ocr,
        r#"{"pages":[{"width":400,"height":100,"words":[
            {"text":"top","bbox":[0,0,30,20],"reading_order":0},
            {"text":"bottom","bbox":[0,50,60,70],"reading_order":1}]}]}"#,
    );
    let output = glirm_bin().args(["prompt", ocr.to_str().unwrap()]).output().unwrap();
    assert!(output.status.success());
    assert_eq!(stdout_of(&output), "top\nbottom\n");
}

#[test]
fn retrieve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("imgs");
    fs::create_dir(&images).unwrap();
    // Three tiny PGMs with distinct halves.
    for (name, lo, hi) in [("a.pgm", 0u8, 255u8), ("b.pgm", 255, 0), ("c.pgm", 40, 200)] {
        let mut data = b"P5\n8 8\n255\n".to_vec();
        for y in 0..8 {
            for _x in 0..8 {
                data.push(if y < 4 { lo } else { hi });
            }
        }
        fs::write(images.join(name), data).unwrap();
    }
    let index = dir.path().join("index.json");
    let status = glirm_bin()
        .args([
            "retrieve",
            "index",
            "--images",
            images.to_str().unwrap(),
            "--out",
            index.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let output = glirm_bin()
        .args([
            "retrieve",
            "query",
            "--index",
            index.to_str().unwrap(),
            "--image",
            images.join("b.pgm").to_str().unwrap(),
            "-k",
            "3",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let ranked: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(ranked[0]["id"], "b.pgm");
    assert_eq!(ranked[0]["distance"], 0);
    assert_eq!(ranked.as_array().unwrap().len(), 3);
}

#[test]
fn ingest_splits_record() {
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("record.json");
    write(
        &record,
        r#"{"field_extractions":[
            {"fieldtype":"invoice_number","text":"12345"},
            {"fieldtype":"li_desc","text":"widget","line_item_id":1}]}"#,
    );
    let out_kie = dir.path().join("kie.json");
    let out_lir = dir.path().join("lir.json");
    let status = glirm_bin()
        .args([
            "ingest",
            record.to_str().unwrap(),
            "--out-kie",
            out_kie.to_str().unwrap(),
            "--out-lir",
            out_lir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let kie: serde_json::Value = serde_json::from_slice(&fs::read(&out_kie).unwrap()).unwrap();
    assert_eq!(kie["fields"]["invoice_number"]["value"], "12345");
    let lir: serde_json::Value = serde_json::from_slice(&fs::read(&out_lir).unwrap()).unwrap();
    assert_eq!(lir["rows"][0]["li_desc"]["value"], "widget");
}
