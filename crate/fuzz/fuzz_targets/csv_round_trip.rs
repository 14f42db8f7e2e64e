#![no_main]

use anova_bf::data::{parse_one_way, parse_two_way};
use libfuzzer_sys::fuzz_target;

fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = parse_one_way(text) {
        let back = parse_one_way(&d.to_csv()).expect("serialized dataset reparses");
        assert_eq!(back.levels(), d.levels());
        assert_eq!(bits(back.values()), bits(d.values()));
    }
    if let Ok(d) = parse_two_way(text) {
        let back = parse_two_way(&d.to_csv()).expect("serialized dataset reparses");
        assert_eq!(
            (back.a_levels(), back.b_levels()),
            (d.a_levels(), d.b_levels())
        );
        assert_eq!(bits(back.values()), bits(d.values()));
    }
});
