#![no_main]

use libfuzzer_sys::fuzz_target;
use sofachain::chain::parse_prompt_context;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let ctx = parse_prompt_context(text);
        if let Some(p) = ctx.precondition {
            assert_eq!(ctx.precondition_code.as_deref(), Some(p.icd_code));
        }
    }
});
