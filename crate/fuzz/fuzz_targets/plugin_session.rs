#![no_main]

// Drives the child side of the plugin protocol (handshake then frames) with
// arbitrary parent bytes.
use denoiselab::denoise::plugin::{serve, ServeTarget};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = serve(data, std::io::sink(), ServeTarget::Echo);
});
