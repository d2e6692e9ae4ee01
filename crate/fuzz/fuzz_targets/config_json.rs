#![no_main]

// Config and manifest documents, merged against the real `sample` flags.
use std::path::Path;

use clap::{CommandFactory, Parser};
use denoiselab_cli::args::Cli;
use denoiselab_cli::config::{config_tokens, flags_from_json};
use denoiselab_cli::denoisers::BankIndex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<BankIndex>(data);
    let Ok(flags) = flags_from_json(data, "sample", Path::new("fuzz.json")) else {
        return;
    };
    let root = Cli::command();
    let argv = ["denoiselab", "sample"];
    let matches = root.clone().get_matches_from(argv);
    let (_, sub_matches) = matches.subcommand().expect("subcommand");
    let sub = root.find_subcommand("sample").expect("sample exists");
    if let Ok(tokens) = config_tokens(&flags, sub, sub_matches) {
        let mut full: Vec<std::ffi::OsString> = argv.iter().map(Into::into).collect();
        full.extend(tokens);
        let _ = Cli::try_parse_from(full);
    }
});
