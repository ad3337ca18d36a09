#![no_main]

use libfuzzer_sys::fuzz_target;
use sofachain::cohort::{parse_demographics, serialize_demographics};

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = parse_demographics(data) else {
        return;
    };
    let text = serialize_demographics(&parsed);
    let again = parse_demographics(text.as_bytes()).expect("serialized demographics parse");
    assert_eq!(parsed, again);
});
