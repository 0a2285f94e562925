use proptest::prelude::*;

use oneshot_core::classifiers::dtw::dtw_with;
use oneshot_core::metrics::{
    accuracy, agreement_index, coherency, confusion, IdentificationRecord, RecognizerResult, Scope,
};
use oneshot_core::GestureLabel;

fn labels(n: usize) -> Vec<GestureLabel> {
    (1..=n).map(|i| GestureLabel::new(format!("g{i}"), i)).collect()
}

/// `(true, predicted)` label indices; `predicted == n` means rejected.
fn records(pairs: &[(usize, usize)], ls: &[GestureLabel], who: &str) -> Vec<IdentificationRecord> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(t, p))| IdentificationRecord {
            instance_id: format!("i{i}"),
            true_label: ls[t].clone(),
            predicted_label: ls.get(p).cloned(),
            recognizer_id: who.into(),
        })
        .collect()
}

fn answers(n: usize, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..n, 0..=n), len)
}

proptest! {
    #[test]
    fn confusion_counts_every_record(pairs in answers(4, 1..60)) {
        let ls = labels(4);
        let recs = records(&pairs, &ls, "m");
        let cm = confusion(&recs, &ls).unwrap();
        prop_assert_eq!(cm.total(), recs.len() as u64);
        let correct = recs.iter().filter(|r| r.is_correct()).count() as u64;
        prop_assert_eq!(cm.trace(), correct);
        let acc = accuracy(&cm).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn agreement_index_is_a_fraction_and_order_free(pairs in answers(3, 2..40), rot in 0usize..40) {
        let ls = labels(3);
        let recs = records(&pairs, &ls, "m");
        let ai = agreement_index(&RecognizerResult::new("m", recs.clone())).unwrap();
        prop_assert!((0.0..=1.0).contains(&ai));
        let mut rotated = recs;
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        prop_assert_eq!(agreement_index(&RecognizerResult::new("m", rotated)).unwrap(), ai);
    }

    #[test]
    fn coherency_is_symmetric_and_self_is_one(
        a in answers(3, 1..40),
        seed in any::<u64>(),
    ) {
        let ls = labels(3);
        // b answers the same instances with its own predictions
        let b: Vec<(usize, usize)> = a
            .iter()
            .enumerate()
            .map(|(i, &(t, _))| (t, ((seed >> (i % 60)) as usize) % 4))
            .collect();
        let ma = RecognizerResult::new("a", records(&a, &ls, "a"));
        let mb = RecognizerResult::new("b", records(&b, &ls, "b"));
        prop_assert_eq!(coherency(&ma, &ma, Scope::All).unwrap(), 1.0);
        let ab = coherency(&ma, &mb, Scope::All).unwrap();
        prop_assert_eq!(ab, coherency(&mb, &ma, Scope::All).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn dtw_is_symmetric_and_zero_on_self(
        a in prop::collection::vec(-5.0f64..5.0, 1..12),
        b in prop::collection::vec(-5.0f64..5.0, 1..12),
    ) {
        let ab = dtw_with(a.len(), b.len(), None, |i, j| (a[i] - b[j]).abs());
        let ba = dtw_with(b.len(), a.len(), None, |i, j| (b[i] - a[j]).abs());
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(dtw_with(a.len(), a.len(), None, |i, j| (a[i] - a[j]).abs()), 0.0);
        // a band can only remove paths
        let banded = dtw_with(a.len(), b.len(), Some(1), |i, j| (a[i] - b[j]).abs());
        prop_assert!(banded >= ab - 1e-12);
    }
}
