//! Fuzz the CLI config-file parser, including the comparator-list syntax
//! reachable through its `k` field.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = cmplq::parse_file_config(text) {
        if let Some(k) = config.k {
            if let Ok(list) = cmplq::parse_k_list(&k) {
                assert!(!list.is_empty());
                assert!(list.windows(2).all(|w| w[0] < w[1]));
                assert!(*list.first().unwrap() >= 1);
            }
        }
    }
});
