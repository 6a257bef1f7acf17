#![no_main]
use libfuzzer_sys::fuzz_target;
use tdual_core::cech::Nerve;
use tdual_core::io::TwistSpec;
use tdual_core::lca::Pair;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<TwistSpec>(data) else { return };
    let pair = Pair::from_coords(&[6], &[vec![3]]).unwrap();
    let nerve = Nerve::sphere();
    if let Ok(Some(t)) = spec.build(&nerve, &pair) {
        assert!(t.violations(&nerve, &|x, y| pair.qadd(x, y)).is_empty());
        let back = TwistSpec::of(&t, &nerve, &pair).build(&nerve, &pair).unwrap();
        assert_eq!(back, Some(t));
    }
});
