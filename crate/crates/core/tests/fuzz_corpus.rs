//! Replays the checked-in fuzz seeds with the same checks as the fuzz
//! targets, so regressions show up without a nightly toolchain.

use std::fs;
use std::path::PathBuf;

use slidecross::{parse_expression, parse_model};

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn expression_seeds() {
    let mut parsed = 0;
    for (name, bytes) in corpus("parse_expression") {
        let Ok(text) = std::str::from_utf8(&bytes) else { continue };
        if let Ok(e) = parse_expression(text) {
            parsed += 1;
            let _ = e.eval(&[0.5, -1.25, 3.0]);
            let printed = e.to_string();
            let again = parse_expression(&printed).unwrap_or_else(|err| panic!("{name}: {err}"));
            assert_eq!(again.to_string(), printed, "{name}");
        }
    }
    assert!(parsed > 0);
}

#[test]
fn model_seeds() {
    let mut parsed = 0;
    for (_, bytes) in corpus("parse_model") {
        let Ok(text) = std::str::from_utf8(&bytes) else { continue };
        if let Ok(m) = parse_model(text) {
            parsed += 1;
            let _ = m.field.eval_all(&[0.25, -0.5, 1.0]);
            let _ = m.field.constants();
        }
    }
    assert!(parsed >= 5);
}
