use proptest::prelude::*;

use lg_core::{LaurentPoly, Monomial, PowerStrategy, ResultCache};

fn poly() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((any::<i64>(), -40i32..=40, -40i32..=40), 0..30)
        .prop_map(|ts| LaurentPoly::from_terms(ts.into_iter().map(|(c, q, s)| Monomial::new(c, q, s))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn entries_round_trip_byte_identically(p in poly(), n in 0u64..1000) {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultCache::new(dir.path());
        let path = cache.store(n, "sha256:abc", PowerStrategy::Binary, &p).unwrap();
        let first = std::fs::read(&path).unwrap();
        prop_assert_eq!(cache.load(n, "sha256:abc").unwrap(), Some((p.clone(), PowerStrategy::Binary)));
        cache.store(n, "sha256:abc", PowerStrategy::Binary, &p).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), first);
        prop_assert_eq!(cache.load(n + 1, "sha256:abc").unwrap(), None);
        // Only the entry itself is left behind.
        prop_assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
