#![no_main]
use libfuzzer_sys::fuzz_target;
use tdual_core::io::NerveSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<NerveSpec>(data) else { return };
    let Ok(nerve) = spec.build() else { return };
    let again = NerveSpec::of(&nerve).build().expect("a built nerve re-serializes");
    assert_eq!(again, nerve);
});
