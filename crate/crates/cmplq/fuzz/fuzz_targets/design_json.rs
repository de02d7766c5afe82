//! Fuzz the design-file decoder: arbitrary bytes must either be rejected
//! with an error or produce a fully validated design whose JSON round-trip
//! is lossless.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(design) = cmplq::QuantizerDesign::from_json(text) {
        let json = design.to_json();
        let again = cmplq::QuantizerDesign::from_json(&json)
            .expect("serialized design must parse");
        assert_eq!(design, again, "design round-trip must be lossless");
    }
});
