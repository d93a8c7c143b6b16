mod common;

use common::naive_transitions;
use outbreak_hmm::hmm::estimate_transitions;
use outbreak_hmm::series::Label;
use proptest::prelude::*;

fn label_strategy() -> impl Strategy<Value = Label> {
    prop_oneof![
        6 => Just(Label::Endemic),
        3 => Just(Label::Outbreak),
        1 => Just(Label::Unknown),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn equals_counting_oracle(seqs in prop::collection::vec(prop::collection::vec(label_strategy(), 1..60), 1..12)) {
        let got = estimate_transitions(seqs.iter().map(Vec::as_slice), 0.0).unwrap();
        let want = naive_transitions(&seqs);
        prop_assert_eq!(got.pi, want.pi);
        prop_assert_eq!(got.trans, want.trans);
        for i in 0..2 {
            prop_assert_eq!(got.defaulted_rows.contains(&i), !want.row_seen[i]);
            prop_assert!((got.trans[i][0] + got.trans[i][1] - 1.0).abs() <= 1e-12);
        }
        prop_assert!((got.pi[0] + got.pi[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pseudocount_keeps_rows_stochastic(
        seqs in prop::collection::vec(prop::collection::vec(label_strategy(), 1..40), 1..6),
        c in 0.0f64..5.0,
    ) {
        let got = estimate_transitions(seqs.iter().map(Vec::as_slice), c).unwrap();
        for row in got.trans {
            prop_assert!((row[0] + row[1] - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
}
