#![no_main]
use libfuzzer_sys::fuzz_target;
use tdual_core::io::GroupSpec;
use tdual_core::lca::{annihilator, SectionPolicy};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<GroupSpec>(data) else { return };
    let Ok(pair) = spec.build(SectionPolicy::LeastRepresentative) else { return };
    let perp = annihilator(&pair.n);
    assert_eq!(pair.n.order() * perp.order(), pair.g.order());
    for x in 0..pair.q() {
        assert_eq!(pair.quotient(pair.sigma(x)), x);
    }
});
