use outbreak_hmm::baseline::{BaselineConfig, BaselineFit};
use outbreak_hmm::pipeline::{rolling_baseline, RollingConfig};
use outbreak_hmm::series::{SurveillanceSeries, WeekIndex, YearWeek};
use outbreak_hmm::simulate::{simulate_series, ScenarioMeans, ScenarioSpec};
use proptest::prelude::*;

fn w(t: u32) -> WeekIndex {
    WeekIndex::new(t).unwrap()
}

/// Endemic-only series: the scenario's outbreak mean set to the endemic one.
fn null_series(id: u32, seed: u64) -> SurveillanceSeries {
    let mut means = ScenarioMeans::new(&ScenarioSpec::get(id).unwrap()).unwrap();
    means.outbreak = means.endemic.clone();
    simulate_series(&means, format!("n{seed}"), YearWeek::new(2000, 1).unwrap(), seed)
        .unwrap()
        .series
        .with_labels(None)
        .unwrap()
}

#[test]
fn null_alarm_rate_is_controlled() {
    let cfg = RollingConfig {
        refit_every: 8,
        ..RollingConfig::default()
    };
    let (mut alarms, mut weeks) = (0usize, 0usize);
    for id in [1, 4, 5, 9, 13] {
        for seed in 0..6 {
            let s = null_series(id, seed);
            for b in rolling_baseline(&s, w(261), w(624), &cfg).unwrap() {
                alarms += usize::from(b.alarm);
                weeks += 1;
            }
        }
    }
    let rate = alarms as f64 / weeks as f64;
    assert!(rate <= 0.03, "null alarm rate {rate}");
}

#[test]
fn alarm_sets_nest_in_alpha() {
    let s = null_series(9, 11);
    let fit = BaselineFit::fit(&s, w(400), &BaselineConfig::default()).unwrap();
    let alphas = [1e-6, 1e-5, 1e-4, 0.001, 0.005, 0.01, 0.02];
    for k in 0..60 {
        let mut prev = false;
        for a in alphas {
            let alarm = fit.score(k, w(400), a).unwrap().alarm;
            assert!(!prev || alarm, "count {k}: alarm at smaller alpha but not at {a}");
            prev = alarm;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn p_value_falls_as_count_rises(seed in 0u64..1000, week in 300u32..620) {
        let s = null_series(1 + (seed % 14) as u32, seed);
        let fit = BaselineFit::fit(&s, w(week), &BaselineConfig::default()).unwrap();
        let mut prev = 1.0;
        for k in 0..80 {
            let p = fit.score(k, w(week), 0.01).unwrap().p_value;
            prop_assert!(p <= prev + 1e-15);
            prop_assert!((0.0..=1.0).contains(&p));
            prev = p;
        }
    }
}
