#![no_main]
use libfuzzer_sys::fuzz_target;

use slidecross_cli::args::{parse_grid, parse_list, parse_pair, parse_param, parse_point};
use slidecross_cli::parse_regime;

// One flag value per run; the first byte picks the parser.
fuzz_target!(|data: &[u8]| {
    let Some((&which, rest)) = data.split_first() else { return };
    let Ok(s) = std::str::from_utf8(rest) else { return };
    match which % 6 {
        0 => {
            if let Ok(g) = parse_grid(s) {
                assert!(!g.is_empty());
                let _ = g.point(g.len() - 1);
            }
        }
        1 => drop(parse_list(s)),
        2 => drop(parse_point(s)),
        3 => drop(parse_pair(s)),
        4 => drop(parse_param(s)),
        _ => drop(parse_regime(s)),
    }
});
