#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(d) = anova_bf::data::parse_one_way(text) {
            assert!(d.p() >= 2 && d.r() >= 2);
            assert_eq!(d.values().len(), d.p() * d.r());
            assert!(d.values().iter().all(|v| v.is_finite()));
        }
    }
});
