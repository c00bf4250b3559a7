#![no_main]

use libfuzzer_sys::fuzz_target;
use vrptw_core::{parse_solomon, write_native, parse_native};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(instance) = parse_solomon(text) {
        let again = parse_native(&write_native(&instance)).expect("written instance parses");
        assert_eq!(again.customer_count(), instance.customer_count());
    }
});
