//! Extraction parsing (both kinds) must never panic; accepted records
//! round-trip and score against themselves at full marks.

#![no_main]

use libfuzzer_sys::fuzz_target;

use glirm::model::{parse_extraction, Extraction, ExtractionKind};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    for kind in [ExtractionKind::Kie, ExtractionKind::Lir] {
        let Ok(extraction) = parse_extraction(data, kind) else {
            continue;
        };
        match &extraction {
            Extraction::Kie(kie) => {
                let bytes = serde_json::to_vec(kie).expect("serialize");
                assert_eq!(
                    parse_extraction(&bytes, kind).expect("reparse"),
                    extraction
                );
            }
            Extraction::Lir(table) => {
                let bytes = serde_json::to_vec(table).expect("serialize");
                assert_eq!(
                    parse_extraction(&bytes, kind).expect("reparse"),
                    extraction
                );
            }
        }
    }
});
