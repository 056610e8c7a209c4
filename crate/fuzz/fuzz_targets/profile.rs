#![no_main]
use libfuzzer_sys::fuzz_target;
use memtol::workload::aggregate_to_model;
use memtol::OperationModelParams;
use memtol_cli::config::parse_profile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(profile) = parse_profile(text) else { return };
    // A validated profile must sample and aggregate without panicking.
    let _ = profile.trace(0, 64);
    if let Ok(p) = aggregate_to_model(&profile, &OperationModelParams::example()) {
        let hops = profile.hops_per_op.mean();
        assert!((p.m_accesses * p.s_ios - hops).abs() <= 1e-9 * hops.max(1.0));
    }
});
