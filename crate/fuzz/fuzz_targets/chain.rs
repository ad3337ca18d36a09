#![no_main]

use libfuzzer_sys::fuzz_target;
use sofachain::chain::{
    check_derivation, forced_prefix, parse_chain, parse_prompt_context, DerivationContext, NodeKey,
};
use sofachain::sofa::RuleConfig;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let chain = parse_chain(&text);
    let ctx = DerivationContext::new(&parse_prompt_context(&text), RuleConfig::default(), 0.05);
    let derived = check_derivation(&chain, &ctx);
    assert_eq!(derived.len(), NodeKey::all().len());
    for key in NodeKey::all() {
        assert_eq!(NodeKey::parse(&key.label()), Some(key));
        if let Ok(prefix) = forced_prefix(&text, key) {
            assert!(text.starts_with(&prefix));
        }
    }
    let _ = NodeKey::parse(&text);
});
