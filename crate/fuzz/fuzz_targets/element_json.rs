#![no_main]
use libfuzzer_sys::fuzz_target;
use tdual_core::crossed::{ConvolutionElement, CrossedProduct, ElementJson};
use tdual_core::lca::{Pair, SectionPolicy};

fuzz_target!(|data: &[u8]| {
    let Ok(j) = serde_json::from_slice::<ElementJson>(data) else { return };
    let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
    let dual = pair.dual(SectionPolicy::LeastRepresentative).unwrap();
    let cp = CrossedProduct::trivial(pair, dual, 1).unwrap();
    if let Ok(f) = ConvolutionElement::from_json(&cp, &j) {
        let back = ConvolutionElement::from_json(&cp, &f.to_json()).unwrap();
        assert_eq!(back.max_diff(&f), 0.0);
        let _ = cp.operator_norm(&f);
    }
});
