#![no_main]

use denoiselab::toy::ToyDenoiser;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = ToyDenoiser::from_bytes(data) {
        let again = ToyDenoiser::from_bytes(&m.to_bytes()).expect("re-encoded checkpoint parses");
        assert_eq!(again.to_bytes(), m.to_bytes());
    }
});
