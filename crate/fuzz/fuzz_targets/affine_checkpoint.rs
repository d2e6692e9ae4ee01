#![no_main]

use denoiselab::denoise::AffineDenoiser;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = AffineDenoiser::from_bytes(data) {
        let again = AffineDenoiser::from_bytes(&d.to_bytes()).expect("re-encoded checkpoint parses");
        assert_eq!(again.to_bytes(), d.to_bytes());
    }
});
