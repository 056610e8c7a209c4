//! Every checked-in fuzz seed is a valid input for its entry point.

use std::fs;
use std::path::PathBuf;

use clap::Parser;
use memtol_cli::args::Cli;
use memtol_cli::axis::{parse_axis_arg, parse_values};
use memtol_cli::config::{parse_profile, Plan, RunConfig};
use memtol_cli::grid::expand;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn run_config_seeds() {
    for (name, data) in seeds("run_config") {
        let cfg = RunConfig::from_json(text(&data)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let plan = Plan::from_config(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        expand(&plan).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn axis_value_seeds() {
    for (name, data) in seeds("axis_values") {
        let s = text(&data);
        let ok = if s.contains('=') {
            parse_axis_arg(s).is_ok()
        } else {
            parse_values("l_mem", s).is_ok()
        };
        assert!(ok, "{name}");
    }
}

#[test]
fn profile_seeds() {
    for (name, data) in seeds("profile") {
        parse_profile(text(&data)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn cli_arg_seeds() {
    for (name, data) in seeds("cli_args") {
        let args = std::iter::once("memtol").chain(text(&data).split('\0'));
        Cli::try_parse_from(args).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
