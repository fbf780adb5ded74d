#![no_main]
use libfuzzer_sys::fuzz_target;

use slidecross::parse_model;

fuzz_target!(|data: &str| {
    if let Ok(m) = parse_model(data) {
        let _ = m.field.eval_all(&[0.25, -0.5, 1.0]);
        let _ = m.field.constants();
    }
});
