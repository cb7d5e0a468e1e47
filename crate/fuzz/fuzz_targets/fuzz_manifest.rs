//! Manifest parsing must never panic on arbitrary bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;

use glirm::manifest::parse_manifest;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(entries) = parse_manifest(data) {
        // Accepted manifests have unique ids.
        for (i, a) in entries.iter().enumerate() {
            for b in &entries[i + 1..] {
                assert_ne!(a.id, b.id);
            }
        }
    }
});
