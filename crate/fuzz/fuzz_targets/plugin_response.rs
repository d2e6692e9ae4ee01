#![no_main]

use denoiselab::denoise::plugin::{read_handshake, read_response};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&shape, rest)) = data.split_first() else {
        return;
    };
    let dim = (shape & 0x0f) as usize + 1;
    let rows = (shape >> 4) as usize;
    let mut cursor = rest;
    if read_handshake(&mut cursor).is_ok() {
        if let Ok(m) = read_response(&mut cursor, dim, rows) {
            assert_eq!(m.shape(), (rows, dim));
        }
    }
    let mut cursor = rest;
    let _ = read_response(&mut cursor, dim, rows);
});
