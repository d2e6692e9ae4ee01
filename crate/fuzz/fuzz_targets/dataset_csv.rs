#![no_main]

use denoiselab::dataset::parse_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(x) = parse_csv(data) {
        assert!(x.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }
});
