#![no_main]

use denoiselab::dataset::{read_container_bytes, write_container_bytes};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_container_bytes(data) {
        let again = read_container_bytes(&write_container_bytes(&m)).expect("re-encoded container parses");
        assert_eq!(again.shape(), m.shape());
        assert!(again.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
});
