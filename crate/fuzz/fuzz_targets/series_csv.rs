#![no_main]

use denoiselab::metrics::MetricSeries;
use denoiselab_cli::svg;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = MetricSeries::parse_csv("fuzz", data) {
        assert_eq!(s.sigmas.len(), s.values.len());
        let _ = svg::render(&[s], "fuzz");
    }
});
