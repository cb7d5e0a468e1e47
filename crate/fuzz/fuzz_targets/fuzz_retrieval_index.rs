//! Retrieval-index deserialization and querying must never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

use glirm::retrieval::{retrieve_nearest, RetrievalIndex, WaveletHash};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    let Ok(index) = RetrievalIndex::from_json_slice(data) else {
        return;
    };
    let json = index.to_json_string();
    let back = RetrievalIndex::from_json_slice(json.as_bytes()).expect("reparse");
    assert_eq!(back, index);
    // Query with the length of the first entry, if any.
    if let Some(hash) = index.entries.values().next() {
        let query = WaveletHash {
            bits: vec![false; hash.len()],
        };
        let _ = retrieve_nearest(&index, &query, 3);
    }
});
