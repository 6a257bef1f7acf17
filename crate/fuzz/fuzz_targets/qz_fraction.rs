#![no_main]
use libfuzzer_sys::fuzz_target;
use tdual_core::qz::Qz;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(q) = text.parse::<Qz>() else { return };
    let again: Qz = q.to_string().parse().unwrap();
    assert_eq!(again, q);
    assert_eq!(q + (-q), Qz::ZERO);
});
