#![no_main]

use denoiselab_cli::denoisers::DenoiserSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Err(e) = text.parse::<DenoiserSpec>() {
            assert_eq!(e.code(), 2);
        }
    }
});
