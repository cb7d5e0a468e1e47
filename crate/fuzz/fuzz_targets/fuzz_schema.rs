//! Schema linting and the dummy-key workaround must never panic on
//! arbitrary schema documents or sample streams.

#![no_main]

use libfuzzer_sys::fuzz_target;

use glirm::schema::{
    apply_dummy_key_workaround, lint_schema_bytes, parse_samples_jsonl, strip_dummy_key,
};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    // As a schema document.
    let _ = lint_schema_bytes(data, None);
    if let Ok(schema) = serde_json::from_slice::<serde_json::Value>(data) {
        if let Ok(fixed) = apply_dummy_key_workaround(&schema) {
            let _ = strip_dummy_key(&fixed);
        }
    }
    // As sample outputs against a fixed schema.
    let schema = br#"{"type":"object","properties":{"amount":{},"currency":{}},"required":["amount"]}"#;
    if parse_samples_jsonl(data).is_ok() {
        let _ = lint_schema_bytes(schema, Some(data));
    }
});
