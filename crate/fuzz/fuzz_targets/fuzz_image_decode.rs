//! Image decoding and hashing must never panic on arbitrary bytes; the
//! decode limits keep crafted headers from ballooning memory.

#![no_main]

use libfuzzer_sys::fuzz_target;

use glirm::retrieval::{decode_image, wavelet_hash};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 18 {
        return;
    }
    if let Ok(image) = decode_image(data) {
        let _ = wavelet_hash(&image);
    }
});
