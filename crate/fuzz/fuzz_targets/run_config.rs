#![no_main]
use libfuzzer_sys::fuzz_target;
use memtol_cli::config::{Plan, RunConfig};
use memtol_cli::grid::expand;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::from_json(text) else { return };
    let Ok(mut plan) = Plan::from_config(&cfg) else { return };
    // Keep expansion cheap; the size check itself is what matters here.
    plan.max_points = plan.max_points.min(256);
    if let Ok(points) = expand(&plan) {
        assert!(!points.is_empty() && points.len() <= 256);
        for pt in &points {
            assert!(pt.params.validate().is_ok());
        }
    }
});
