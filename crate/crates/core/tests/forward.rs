mod common;

use common::*;
use outbreak_hmm::hmm::{forward_posterior, rolling_posteriors, ForwardOptions, HmmModel};
use outbreak_hmm::series::{Label, SurveillanceSeries, YearWeek};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn series(counts: Vec<u64>, labels: Option<Vec<Label>>) -> SurveillanceSeries {
    SurveillanceSeries::new("s", YearWeek::new(2012, 1).unwrap(), counts, labels).unwrap()
}

struct Case {
    model: HmmModel,
    beta: [f64; 4],
    b4: f64,
    r: f64,
    counts: Vec<u64>,
    labels: Vec<Label>,
}

fn random_case(rng: &mut ChaCha8Rng, t_len: usize, label_rate: f64) -> Case {
    let p0 = rng.random_range(0.05..0.95);
    let a00 = rng.random_range(0.5..0.99);
    let a11 = rng.random_range(0.1..0.9);
    let beta = [
        rng.random_range(-1.0..3.0),
        rng.random_range(-0.01..0.01),
        rng.random_range(-0.8..0.8),
        rng.random_range(-0.8..0.8),
    ];
    let b4 = rng.random_range(0.0..2.5);
    let r = rng.random_range(0.5..50.0);
    let counts = (0..t_len).map(|_| rng.random_range(0..40)).collect();
    let labels = (0..t_len)
        .map(|_| {
            if rng.random::<f64>() < label_rate {
                Label::from_state(rng.random_range(0..2))
            } else {
                Label::Unknown
            }
        })
        .collect();
    Case {
        model: single_series_model(beta, b4, r, [p0, 1.0 - p0], [[a00, 1.0 - a00], [1.0 - a11, a11]]),
        beta,
        b4,
        r,
        counts,
        labels,
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn matches_path_enumeration_without_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let t_len = rng.random_range(1..=12);
        let c = random_case(&mut rng, t_len, 0.0);
        let s = series(c.counts.clone(), None);
        let got = forward_posterior(&c.model, &s, 0, w(t_len as u32), ForwardOptions::default()).unwrap();
        let e = oracle_emissions(c.beta, c.b4, c.r, &c.counts);
        let want = brute_force_posterior(c.model.pi(), c.model.trans(), &e, &vec![None; t_len]);
        assert!(rel_err(got.p_outbreak, want) < 1e-10, "{} vs {want}", got.p_outbreak);
    }
}

#[test]
fn matches_path_enumeration_with_clamped_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let t_len = rng.random_range(2..=12);
        let mut c = random_case(&mut rng, t_len, 0.4);
        // a labeled final week pins the answer; keep it open
        c.labels[t_len - 1] = Label::Unknown;
        let s = series(c.counts.clone(), Some(c.labels.clone()));
        let got = forward_posterior(&c.model, &s, 0, w(t_len as u32), ForwardOptions::default()).unwrap();
        let e = oracle_emissions(c.beta, c.b4, c.r, &c.counts);
        let known: Vec<Option<usize>> = c.labels.iter().map(|l| l.state()).collect();
        let want = brute_force_posterior(c.model.pi(), c.model.trans(), &e, &known);
        assert!(rel_err(got.p_outbreak, want) < 1e-10, "{} vs {want}", got.p_outbreak);

        let free = forward_posterior(&c.model, &s, 0, w(t_len as u32), ForwardOptions { clamp_labels: false }).unwrap();
        let want_free = brute_force_posterior(c.model.pi(), c.model.trans(), &e, &vec![None; t_len]);
        assert!(rel_err(free.p_outbreak, want_free) < 1e-10);
    }
}

#[test]
fn rolling_matches_masked_single_week_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let c = random_case(&mut rng, 40, 1.0);
    let s = series(c.counts.clone(), Some(c.labels.clone()));
    let lag = 5;
    let rolled = rolling_posteriors(&c.model, &s, 0, w(20), w(40), lag, ForwardOptions::default()).unwrap();
    for p in rolled {
        let cut = w(p.week.get() - lag);
        let masked = s.window(w(1), p.week, Some(cut)).unwrap();
        let single = forward_posterior(&c.model, &masked, 0, p.week, ForwardOptions::default()).unwrap();
        assert!(rel_err(p.p_outbreak, single.p_outbreak) < 1e-12);
        assert!(rel_err(p.log_evidence, single.log_evidence) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_grows_with_final_count(
        seed in any::<u64>(),
        t_len in 1usize..15,
        bump in 1u64..30,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_case(&mut rng, t_len, 0.0);
        let mut counts = c.counts.clone();
        let base = forward_posterior(&c.model, &series(counts.clone(), None), 0, w(t_len as u32), ForwardOptions::default())
            .unwrap()
            .p_outbreak;
        counts[t_len - 1] += bump;
        let up = forward_posterior(&c.model, &series(counts, None), 0, w(t_len as u32), ForwardOptions::default())
            .unwrap()
            .p_outbreak;
        prop_assert!(up >= base - 1e-15, "{} < {}", up, base);
    }

    #[test]
    fn posterior_is_a_probability(seed in any::<u64>(), t_len in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_case(&mut rng, t_len, 0.3);
        let mut labels = c.labels.clone();
        labels[t_len - 1] = Label::Unknown;
        let p = forward_posterior(&c.model, &series(c.counts, Some(labels)), 0, w(t_len as u32), ForwardOptions::default());
        if let Ok(p) = p {
            prop_assert!((0.0..=1.0).contains(&p.p_outbreak));
            prop_assert!(p.log_evidence.is_finite());
        }
    }
}
