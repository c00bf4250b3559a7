#![no_main]

use libfuzzer_sys::fuzz_target;
use vrptw_core::{fixtures, ConstraintsDocument, SideConstraints};

fuzz_target!(|data: &[u8]| {
    let Ok(doc) = serde_json::from_slice::<ConstraintsDocument>(data) else { return };
    let instance = fixtures::study12();
    if let Ok(constraints) = SideConstraints::from_document(&doc, &instance) {
        constraints.check_invariants(&instance).expect("loaded constraints keep the invariants");
    }
});
