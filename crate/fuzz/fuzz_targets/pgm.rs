#![no_main]

use denoiselab::dataset::parse_pgm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_pgm(data);
});
