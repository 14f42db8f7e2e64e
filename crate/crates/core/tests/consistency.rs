use anova_bf::bayes_factor::{log_bf_fb, Criterion};
use anova_bf::consistency::{
    asymptotic_log_bf, h_threshold, limit_we_wt, many_levels_growth_rate,
    two_way_consistency_window, EffectSizes, Regime, Truth, Verdict,
};
use proptest::prelude::*;

fn bridge_gap(truth: Truth, r: usize, c_a: f64) -> f64 {
    let p = 500;
    let ratio = limit_we_wt(Regime::ManyLevels, truth, r, c_a)
        .unwrap()
        .point()
        .unwrap();
    let exact = log_bf_fb(p * r, p, ratio).unwrap();
    let approx = asymptotic_log_bf(Criterion::FullyBayes, Regime::ManyLevels, truth, p, r, c_a)
        .unwrap()
        .value;
    ((exact - approx) / exact).abs()
}

#[test]
fn exact_and_asymptotic_agree_at_500_levels() {
    // away from c_a = h(r), where the leading term vanishes
    for (r, c_a) in [(2, 0.3), (2, 2.0), (2, 4.0), (5, 0.2), (5, 1.0), (5, 2.0)] {
        let gap = bridge_gap(Truth::Alternative, r, c_a);
        assert!(gap < 0.02, "r={r} c_a={c_a}: {gap}");
    }
    for r in [2, 5] {
        let gap = bridge_gap(Truth::Null, r, 0.0);
        assert!(gap < 0.02, "null r={r}: {gap}");
    }
}

#[test]
fn h_matches_paper_rounding() {
    assert_eq!(h_threshold(2).unwrap(), 1.0);
    assert!((0.49..=0.50).contains(&h_threshold(5).unwrap()));
    assert!((0.29..=0.295).contains(&h_threshold(10).unwrap()));
    assert!(h_threshold(1_000_000).unwrap() < 1e-4);
}

proptest! {
    #[test]
    fn fb_trajectory_follows_threshold(r in 2usize..50, c_a in 0.0..6.0f64) {
        let h = h_threshold(r).unwrap();
        prop_assume!((c_a - h).abs() > 1e-9);
        let at = |p: usize| {
            asymptotic_log_bf(Criterion::FullyBayes, Regime::ManyLevels, Truth::Alternative, p, r, c_a)
                .unwrap()
                .value
        };
        let slope = at(2001) - at(2000);
        prop_assert_eq!(slope > 0.0, c_a > h);
        prop_assert_eq!(many_levels_growth_rate(r, c_a).unwrap() > 0.0, c_a > h);
        if c_a < h {
            prop_assert!(at(1_000_000) < at(1000));
        }
    }

    #[test]
    fn h_strictly_decreasing(r in 2usize..100) {
        prop_assert!(h_threshold(r + 1).unwrap() < h_threshold(r).unwrap());
    }

    #[test]
    fn window_matches_strict_inequalities(
        r in 2usize..20, c_a in 0.0..4.0f64, c_b in 0.0..4.0f64, c_ab in 0.0..8.0f64,
    ) {
        let e = EffectSizes::new(c_a, c_b, c_ab).unwrap();
        let rf = r as f64;
        let total = 1.0 + c_a + c_b + c_ab;
        let expected = rf.powf(1.0 / (rf - 1.0)) < total && total < (1.0 + c_ab).powf(rf) / rf;
        let verdict = two_way_consistency_window(r, &e).unwrap();
        prop_assert_eq!(verdict == Verdict::Consistent, expected);
    }
}
