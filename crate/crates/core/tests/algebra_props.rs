use proptest::prelude::*;

use lg_core::extract::{Extractor, TraceTriple};
use lg_core::{Constants, EndoVec, LaurentPoly, Monomial, MulKernel, PowerStrategy};

fn poly() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((-30i64..=30, -6i32..=6, -6i32..=6), 0..5)
        .prop_map(|ts| LaurentPoly::from_terms(ts.into_iter().map(|(c, q, s)| Monomial::new(c, q, s))))
}

fn endovec() -> impl Strategy<Value = EndoVec> {
    (poly(), poly(), poly()).prop_map(|(a, b, c)| EndoVec::new(a, b, c))
}

fn constants() -> &'static Constants {
    Constants::builtin()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn boxtimes_is_a_commutative_monoid(f in endovec(), g in endovec(), h in endovec()) {
        let alg = constants().algebra();
        prop_assert_eq!(alg.boxtimes(&f, &g), alg.boxtimes(&g, &f));
        prop_assert_eq!(
            alg.boxtimes(&alg.boxtimes(&f, &g), &h),
            alg.boxtimes(&f, &alg.boxtimes(&g, &h))
        );
        prop_assert_eq!(alg.boxtimes(&EndoVec::cc(), &f), f.clone());
        prop_assert_eq!(alg.boxtimes(&f, &EndoVec::cc()), f.clone());
    }

    #[test]
    fn boxtimes_is_bilinear(f in endovec(), g in endovec(), h in endovec(), c in poly()) {
        let alg = constants().algebra();
        let sum = EndoVec::from_coords([0, 1, 2].map(|i| f.coords()[i] + g.coords()[i]));
        let lhs = alg.boxtimes(&sum, &h);
        let rhs = alg.boxtimes(&f, &h);
        let rhs2 = alg.boxtimes(&g, &h);
        prop_assert_eq!(lhs, EndoVec::from_coords([0, 1, 2].map(|i| rhs.coords()[i] + rhs2.coords()[i])));
        prop_assert_eq!(alg.boxtimes(&f.scale(&c), &h), alg.boxtimes(&f, &h).scale(&c));
    }

    #[test]
    fn involution_commutes_with_boxtimes(f in endovec(), g in endovec()) {
        let alg = constants().algebra();
        prop_assert_eq!(
            alg.boxtimes(&f, &g).apply_involution(),
            alg.boxtimes(&f.apply_involution(), &g.apply_involution())
        );
    }

    #[test]
    fn extraction_round_trips(v in endovec()) {
        let ex = Extractor::new(constants());
        let t = ex.forward_traces(&v);
        prop_assert_eq!(ex.extract(&t).unwrap(), v.clone());
        prop_assert_eq!(ex.forward_traces(&ex.extract(&t).unwrap()), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_strategies_agree(f in endovec(), n in 0u64..6) {
        let alg = constants().algebra();
        let split = alg.boxtimes_pow(&f, n, PowerStrategy::Split);
        prop_assert_eq!(alg.boxtimes_pow(&f, n, PowerStrategy::Binary), split.clone());
        prop_assert_eq!(alg.boxtimes_pow(&f, n, PowerStrategy::Sequential), split.clone());
        let row = constants().as_star();
        let paired = alg.splitting().expect("builtin table splits").pair_pow(&f, n, row);
        prop_assert_eq!(paired, row.pair(&split));
    }

    #[test]
    fn product_kernels_agree(f in endovec(), g in endovec()) {
        let alg = constants().algebra();
        prop_assert_eq!(
            alg.boxtimes_with(&f, &g, MulKernel::Modular),
            alg.boxtimes_with(&f, &g, MulKernel::Schoolbook)
        );
    }

    /// Arbitrary traces are rarely consistent; when extraction succeeds it
    /// must reproduce them, and when it fails it names a coordinate.
    #[test]
    fn arbitrary_traces(r in poly(), t in poly(), w in poly()) {
        let ex = Extractor::new(constants());
        let traces = TraceTriple::new(r, t, w);
        match ex.extract(&traces) {
            Ok(v) => prop_assert_eq!(ex.forward_traces(&v), traces),
            Err(e) => prop_assert!(e.to_string().starts_with("inconsistent traces")),
        }
    }
}

#[test]
fn pure_power_examples() {
    let alg = constants().algebra();
    for k in 0..5 {
        assert_eq!(alg.boxtimes_pow(&EndoVec::cc(), k, PowerStrategy::Split), EndoVec::cc());
    }
    assert!(alg.boxtimes_pow(&EndoVec::ll(), 2, PowerStrategy::Split).is_zero());
}
