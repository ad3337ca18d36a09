#![no_main]

use libfuzzer_sys::fuzz_target;
use sofachain::corpus::{parse_forced_outputs, parse_jsonl, parse_model_outputs, to_jsonl, CorpusRecord};

fuzz_target!(|data: &[u8]| {
    if let Ok(outputs) = parse_model_outputs(data) {
        assert_eq!(parse_model_outputs(to_jsonl(&outputs).as_bytes()).unwrap(), outputs);
    }
    if let Ok(forced) = parse_forced_outputs(data) {
        assert_eq!(parse_forced_outputs(to_jsonl(&forced).as_bytes()).unwrap(), forced);
    }
    let _ = parse_jsonl::<CorpusRecord>(data);
});
