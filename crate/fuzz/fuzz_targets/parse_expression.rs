#![no_main]
use libfuzzer_sys::fuzz_target;

use slidecross::parse_expression;

fuzz_target!(|data: &str| {
    if let Ok(e) = parse_expression(data) {
        let _ = e.eval(&[0.5, -1.25, 3.0]);
        let printed = e.to_string();
        let again = parse_expression(&printed).expect("printed expression reparses");
        assert_eq!(again.to_string(), printed);
    }
});
