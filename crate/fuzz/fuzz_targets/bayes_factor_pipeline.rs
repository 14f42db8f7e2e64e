#![no_main]

use anova_bf::bayes_factor::{one_way_report, two_way_selection};
use anova_bf::data::{parse_one_way, parse_two_way};
use anova_bf::ss::{one_way_ss, two_way_ss};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = parse_one_way(text) {
        let ss = one_way_ss(&d);
        assert!(ss.w_e >= 0.0 && ss.w_h >= 0.0);
        if let Ok(rep) = one_way_report(&ss, d.p(), d.r()) {
            assert!(!rep.log_bf_fb.is_nan() && !rep.log_bf_bic.is_nan());
            assert!((0.0..=1.0).contains(&rep.posterior_prob_fb));
            assert!((0.0..=1.0).contains(&rep.ss_ratio));
        }
    }
    if let Ok(d) = parse_two_way(text) {
        let ss = two_way_ss(&d);
        if let Ok(sel) = two_way_selection(&ss, d.p(), d.q(), d.r()) {
            for rep in &sel.reports {
                assert!(!rep.log_bf_fb.is_nan() && !rep.log_bf_bic.is_nan());
            }
            assert!(sel
                .posterior_fb
                .iter()
                .all(|(_, w)| (0.0..=1.0).contains(w)));
        }
    }
});
