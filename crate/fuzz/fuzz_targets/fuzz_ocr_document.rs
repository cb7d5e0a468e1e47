//! OCR document parsing must never panic, and accepted documents must
//! survive a serialize/reparse round trip and render as prompts.

#![no_main]

use libfuzzer_sys::fuzz_target;

use glirm::model::parse_ocr_document;
use glirm::{build_layout_prompt, default_char_cell_px};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    let Ok(doc) = parse_ocr_document(data) else {
        return;
    };
    let bytes = serde_json::to_vec(&doc).expect("accepted documents serialize");
    let reparsed = parse_ocr_document(&bytes).expect("serialized documents reparse");
    assert_eq!(reparsed, doc, "round trip must be lossless");
    for page in &doc.pages {
        let cell = default_char_cell_px(page).unwrap_or(1.0);
        let _ = build_layout_prompt(page, cell);
    }
});
