#![no_main]

use libfuzzer_sys::fuzz_target;
use sofachain::numfmt::{format_value, parse_number};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Some(v) = parse_number(text) {
        assert!(v.is_finite());
        let rendered = format_value(v);
        assert!(parse_number(&rendered).is_some(), "{rendered}");
    }
});
