use coarselab::lamplighter::{word_length, GenSet, LampElement, LowerBound};
use proptest::prelude::*;

fn element(m: u32) -> impl Strategy<Value = LampElement> {
    (prop::collection::vec((-6i64..6, 0..m), 0..6), -6i64..6)
        .prop_map(move |(lamps, cursor)| LampElement::from_lamps(m, &lamps, cursor).unwrap())
}

fn triple() -> impl Strategy<Value = (LampElement, LampElement, LampElement)> {
    (2u32..5).prop_flat_map(|m| (element(m), element(m), element(m)))
}

fn small(m: u32) -> impl Strategy<Value = LampElement> {
    (prop::collection::vec((-2i64..2, 0..m), 0..3), -2i64..3)
        .prop_map(move |(lamps, cursor)| LampElement::from_lamps(m, &lamps, cursor).unwrap())
}

proptest! {
    #[test]
    fn associativity((a, b, c) in triple()) {
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn inverse_and_powers((a, b, _c) in triple(), n in -5i64..5) {
        prop_assert!(a.multiply(&a.inverse()).unwrap().is_identity());
        prop_assert_eq!(a.multiply(&b).unwrap().inverse(), b.inverse().multiply(&a.inverse()).unwrap());
        prop_assert_eq!(a.pow(n).multiply(&a).unwrap(), a.pow(n + 1));
    }

    #[test]
    fn keys_distinguish_elements((a, b, _c) in triple()) {
        prop_assert_eq!(a.key() == b.key(), a == b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn word_length_is_symmetric_and_bounded(g in small(2), h in small(2), automaton in any::<bool>()) {
        let set = if automaton { GenSet::automaton(2).unwrap() } else { GenSet::wreath(2).unwrap() };
        let bound = LowerBound::new(&set.symmetric());
        let lg = word_length(&set, &g, 24).value().unwrap();
        let lh = word_length(&set, &h, 24).value().unwrap();
        prop_assert_eq!(word_length(&set, &g.inverse(), 24).value(), Some(lg));
        prop_assert!(bound.of(&g) <= lg);
        let lgh = word_length(&set, &g.multiply(&h).unwrap(), 48).value().unwrap();
        prop_assert!(lgh <= lg + lh);
    }
}
