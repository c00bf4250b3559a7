#![no_main]

use libfuzzer_sys::fuzz_target;
use vrptw_core::{parse_native, write_native};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(instance) = parse_native(text) {
        let again = parse_native(&write_native(&instance)).expect("written instance parses");
        assert_eq!(again, instance);
    }
});
