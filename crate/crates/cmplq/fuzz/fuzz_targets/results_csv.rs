//! Fuzz the results-CSV parser: arbitrary bytes must be cleanly accepted
//! or rejected, and accepted rows must survive a render/reparse cycle.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = cmplq::parse_results_csv_str(text) {
        let result = cmplq::ExperimentResult {
            seed: 0,
            params_hash: 0,
            records,
        };
        let rendered = cmplq::render_csv(&result);
        let again = cmplq::parse_results_csv_str(&rendered)
            .expect("rendered CSV must parse");
        let twice = cmplq::render_csv(&cmplq::ExperimentResult {
            seed: 0,
            params_hash: 0,
            records: again,
        });
        assert_eq!(rendered, twice, "render/parse must reach a fixed point");
    }
});
