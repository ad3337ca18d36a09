#![no_main]

use libfuzzer_sys::fuzz_target;
use sofachain::catalog::FeatureCatalog;
use sofachain::observation::{parse_observations, serialize_observations};

fuzz_target!(|data: &[u8]| {
    let catalog = FeatureCatalog::standard();
    let Ok(parsed) = parse_observations(data, catalog) else {
        return;
    };
    let text = serialize_observations(&parsed);
    let again = parse_observations(text.as_bytes(), catalog).expect("serialized observations parse");
    assert_eq!(parsed, again);
});
