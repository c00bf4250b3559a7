#![no_main]

use libfuzzer_sys::fuzz_target;
use vrptw_core::provenance::{load_session, save_session};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((instance, history)) = load_session(text) {
        let (again_instance, again) = load_session(&save_session(&instance, &history)).expect("saved session loads");
        assert_eq!(again_instance, instance);
        assert_eq!(again, history);
    }
});
