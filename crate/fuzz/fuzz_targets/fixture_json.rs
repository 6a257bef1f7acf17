#![no_main]
use libfuzzer_sys::fuzz_target;
use tdual_core::io::{triple_from_json, TripleJson};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(t) = triple_from_json(text) else { return };
    let j: TripleJson = serde_json::from_str(text).unwrap();
    let again = serde_json::to_string(&TripleJson::of(&t, &j.groups)).unwrap();
    triple_from_json(&again).expect("a validated triple re-serializes");
});
