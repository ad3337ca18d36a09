#![no_main]

use libfuzzer_sys::fuzz_target;
use sofachain::catalog::FeatureCatalog;
use sofachain::forecast::{import_external_forecast, serialize_forecasts};

fuzz_target!(|data: &[u8]| {
    let catalog = FeatureCatalog::standard();
    let Ok(grids) = import_external_forecast(data, catalog) else {
        return;
    };
    let text = serialize_forecasts(&grids);
    let again = import_external_forecast(text.as_bytes(), catalog).expect("serialized forecasts parse");
    assert_eq!(grids, again);
});
