#![no_main]
use libfuzzer_sys::fuzz_target;
use memtol_cli::axis::{parse_axis_arg, parse_values, MAX_RANGE_VALUES};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_values("l_mem", text) {
        assert!(!values.is_empty() && values.len() <= MAX_RANGE_VALUES);
    }
    if let Ok((axis, values)) = parse_axis_arg(text) {
        assert_eq!(axis.name().parse::<memtol_cli::axis::Axis>().ok(), Some(axis));
        assert!(values.len() <= MAX_RANGE_VALUES);
    }
});
