#![no_main]
use clap::Parser;
use libfuzzer_sys::fuzz_target;
use memtol_cli::args::Cli;

// Arguments are NUL-separated. Only parsing runs; nothing is executed.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let args = std::iter::once("memtol").chain(text.split('\0'));
    let _ = Cli::try_parse_from(args);
});
