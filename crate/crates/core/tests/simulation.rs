use anova_bf::bayes_factor::{Criterion, ModelId};
use anova_bf::consistency::EffectSizes;
use anova_bf::simulation::{
    make_alpha, make_two_way_effects, run_frequency_experiment, simulate_one_way, simulate_two_way,
    substream, SimulationConfig, TruthSpec,
};
use anova_bf::ss::one_way_ss;

fn config(
    truth: TruthSpec,
    p_list: Vec<usize>,
    r_list: Vec<usize>,
    reps: usize,
) -> SimulationConfig {
    SimulationConfig {
        p_list,
        r_list,
        truth,
        replications: reps,
        seed: 20240917,
        criteria: vec![Criterion::FullyBayes, Criterion::Bic],
    }
}

#[test]
fn alpha_constraints_over_grid() {
    for p in 2..=101 {
        for c_a in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0] {
            for sigma2 in [1.0, 0.25, 7.0] {
                let alpha = make_alpha(p, c_a, sigma2);
                assert_eq!(alpha.len(), p);
                let sum: f64 = alpha.iter().sum();
                let scale = alpha.iter().map(|a| a.abs()).sum::<f64>().max(1.0);
                assert!(sum.abs() <= 1e-14 * scale, "p={p} c_a={c_a}: sum {sum}");
                let ss: f64 = alpha.iter().map(|a| a * a).sum();
                let got = ss / (p as f64 * sigma2);
                if c_a == 0.0 {
                    assert!(alpha.iter().all(|&a| a == 0.0));
                } else {
                    assert!(((got - c_a) / c_a).abs() <= 1e-12, "p={p} c_a={c_a}: {got}");
                }
            }
        }
    }
}

#[test]
fn two_way_effect_constraints() {
    for (p, q) in [(2, 2), (2, 3), (3, 5), (6, 4), (7, 7)] {
        let e = EffectSizes::new(0.7, 1.3, 2.1).unwrap();
        let fx = make_two_way_effects(p, q, &e, 2.0);
        assert!(fx.alpha.iter().sum::<f64>().abs() < 1e-12);
        assert!(fx.beta.iter().sum::<f64>().abs() < 1e-12);
        for i in 0..p {
            assert!((0..q).map(|j| fx.interaction(i, j)).sum::<f64>().abs() < 1e-12);
        }
        for j in 0..q {
            assert!((0..p).map(|i| fx.interaction(i, j)).sum::<f64>().abs() < 1e-12);
        }
        let ab: f64 = (0..p)
            .flat_map(|i| (0..q).map(move |j| (i, j)))
            .map(|(i, j)| fx.interaction(i, j).powi(2))
            .sum();
        assert!((ab / (p * q) as f64 / 2.0 - 2.1).abs() < 1e-12);
        let bb: f64 = fx.beta.iter().map(|b| b * b).sum();
        assert!((bb / q as f64 / 2.0 - 1.3).abs() < 1e-12);
    }
}

#[test]
fn residual_variance_law_of_large_numbers() {
    let truth = TruthSpec::new(ModelId::A, EffectSizes::one_way(2.0).unwrap(), 3.0, 2.5).unwrap();
    let (p, r) = (100, 1000);
    let d = simulate_one_way(p, r, &truth, &mut substream(7, p, r, 0)).unwrap();
    let ss = one_way_ss(&d);
    let pooled = ss.w_e / (p * (r - 1)) as f64;
    assert!((pooled / 2.5 - 1.0).abs() < 0.02, "{pooled}");
}

#[test]
fn f_statistic_mean_under_null() {
    let (p, r, reps) = (5usize, 10usize, 10_000u64);
    let truth = TruthSpec::null();
    let stats: Vec<f64> = (0..reps)
        .map(|rep| {
            let d = simulate_one_way(p, r, &truth, &mut substream(99, p, r, rep)).unwrap();
            let ss = one_way_ss(&d);
            (ss.w_h / (p - 1) as f64) / (ss.w_e / (p * (r - 1)) as f64)
        })
        .collect();
    let n = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / n;
    let var = stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let expected = 45.0 / 43.0;
    let se = (var / n).sqrt();
    assert!(
        (mean - expected).abs() <= 3.0 * se,
        "mean {mean}, expected {expected}, se {se}"
    );
}

#[test]
fn two_way_simulation_is_reproducible() {
    let truth = TruthSpec::new(
        ModelId::Interaction,
        EffectSizes::new(1.0, 0.5, 0.25).unwrap(),
        0.0,
        1.0,
    )
    .unwrap();
    let a = simulate_two_way(3, 4, 2, &truth, &mut substream(1, 3, 2, 5)).unwrap();
    let b = simulate_two_way(3, 4, 2, &truth, &mut substream(1, 3, 2, 5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn frequencies_do_not_depend_on_thread_count() {
    let cfg = config(
        TruthSpec::one_way_alternative(0.5).unwrap(),
        vec![3, 8],
        vec![2, 4],
        300,
    );
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_frequency_experiment(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.to_csv(), run(3).to_csv());
}

#[test]
fn below_threshold_effect_fades_as_levels_grow() {
    let cfg = config(
        TruthSpec::one_way_alternative(0.1).unwrap(),
        vec![10, 50, 100],
        vec![2],
        2000,
    );
    let table = run_frequency_experiment(&cfg).unwrap();
    let f: Vec<f64> = [10, 50, 100]
        .iter()
        .map(|&p| table.frequency(Criterion::FullyBayes, p, 2).unwrap())
        .collect();
    assert!(f[0] >= f[1] && f[1] >= f[2], "{f:?}");
    assert!(f[2] <= 0.02, "{f:?}");
}

#[test]
fn null_is_recovered_with_many_levels_and_replicates() {
    let cfg = config(TruthSpec::null(), vec![100], vec![100], 200);
    let table = run_frequency_experiment(&cfg).unwrap();
    assert!(table.frequency(Criterion::FullyBayes, 100, 100).unwrap() >= 0.99);
}

#[test]
fn frequencies_are_probabilities() {
    let cfg = config(
        TruthSpec::one_way_alternative(1.0).unwrap(),
        vec![2, 5],
        vec![2, 5],
        100,
    );
    let table = run_frequency_experiment(&cfg).unwrap();
    assert_eq!(table.rows.len(), 8);
    for row in &table.rows {
        assert!((0.0..=1.0).contains(&row.frequency));
        assert_eq!(row.frequency, row.selected as f64 / 100.0);
    }
}
