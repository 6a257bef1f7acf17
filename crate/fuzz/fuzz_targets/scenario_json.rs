#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(s) = tdual_cli::parse(text) else { return };
    let echoed = serde_json::to_string(&s).unwrap();
    assert_eq!(tdual_cli::parse(&echoed).unwrap(), s);
    if let Ok(p) = tdual_cli::prepare(s, 1.0) {
        let _ = tdual_cli::explain(&p, 512);
    }
});
