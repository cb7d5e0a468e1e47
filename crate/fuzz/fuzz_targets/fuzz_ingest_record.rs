//! Annotation-record ingestion must never panic on arbitrary bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;

use glirm::ingest::{ingest_annotation_record, RemapConfig};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    let remap = RemapConfig::default();
    let _ = ingest_annotation_record(data, &remap, None);
    let _ = ingest_annotation_record(data, &remap, Some((1000, 800)));
});
