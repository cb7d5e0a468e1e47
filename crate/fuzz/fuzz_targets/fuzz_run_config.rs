//! Run-config files must parse or fail cleanly, and accepted configs must
//! round-trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

use glirm_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 14 {
        return;
    }
    let Ok(config) = RunConfig::from_json_slice(data) else {
        return;
    };
    let json = serde_json::to_vec(&config).expect("serialize");
    let back = RunConfig::from_json_slice(&json).expect("reparse");
    assert_eq!(back, config);
    let _ = config.echo();
});
