#![no_main]

use libfuzzer_sys::fuzz_target;
use vrptw_core::{fixtures, SolutionDocument};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = SolutionDocument::parse(text) else { return };
    let instance = fixtures::toy3();
    if let Ok((solution, constraints)) = doc.into_solution(&instance) {
        let written = SolutionDocument::new(&instance, &solution, &constraints).to_json();
        let (again, again_constraints) = SolutionDocument::parse(&written)
            .and_then(|d| d.into_solution(&instance))
            .expect("written solution loads");
        assert_eq!(again.visit_lists(), solution.visit_lists());
        assert_eq!(again_constraints, constraints);
    }
});
