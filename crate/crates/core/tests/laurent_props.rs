use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use lg_core::{LaurentPoly, Monomial, MulKernel};

fn coeff() -> impl Strategy<Value = BigInt> {
    prop_oneof![
        3 => (-50i64..=50).prop_map(BigInt::from),
        1 => (any::<i64>(), any::<i64>()).prop_map(|(a, b)| BigInt::from(a) * BigInt::from(b)),
    ]
}

fn poly_with(max_terms: usize, range: i32) -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((coeff(), -range..=range, -range..=range), 0..=max_terms)
        .prop_map(|ts| LaurentPoly::from_terms(ts.into_iter().map(|(c, q, s)| Monomial::new(c, q, s))))
}

fn poly() -> impl Strategy<Value = LaurentPoly> {
    poly_with(8, 8)
}

fn nonzero() -> impl Strategy<Value = LaurentPoly> {
    poly().prop_filter("nonzero", |p| !p.is_zero())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a + &LaurentPoly::zero(), a.clone());
        prop_assert_eq!(&a * &LaurentPoly::one(), a.clone());
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(-(-a.clone()), a.clone());
        prop_assert!((&a * &LaurentPoly::zero()).is_zero());
    }

    #[test]
    fn canonical_order_and_no_zero_terms(a in poly(), b in poly()) {
        let p = &a * &b;
        for w in p.terms().windows(2) {
            prop_assert!((w[0].sexp, w[0].qexp) > (w[1].sexp, w[1].qexp));
        }
        prop_assert!(p.terms().iter().all(|t| t.coeff != BigInt::from(0)));
    }

    #[test]
    fn exact_division_round_trip(a in poly(), b in nonzero()) {
        let product = &a * &b;
        prop_assert_eq!(product.exact_div(&b).unwrap(), a);
    }

    #[test]
    fn involution_is_a_ring_automorphism(a in poly(), b in poly()) {
        prop_assert_eq!(a.apply_involution().apply_involution(), a.clone());
        prop_assert_eq!((&a * &b).apply_involution(), &a.apply_involution() * &b.apply_involution());
        prop_assert_eq!((&a + &b).apply_involution(), &a.apply_involution() + &b.apply_involution());
        let sym = &a + &a.apply_involution();
        prop_assert!(sym.is_involution_fixed());
    }

    #[test]
    fn text_and_structured_round_trips(a in poly()) {
        prop_assert_eq!(a.to_string().parse::<LaurentPoly>().unwrap(), a.clone());
        prop_assert_eq!(LaurentPoly::from_structured(&a.to_structured()).unwrap(), a.clone());
        let json = serde_json::to_string(&a).unwrap();
        prop_assert_eq!(serde_json::from_str::<LaurentPoly>(&json).unwrap(), a.clone());
    }

    #[test]
    fn substitution_is_a_homomorphism(a in poly(), b in poly(), q in 1i64..5, s in 1i64..5, sign in prop::bool::ANY) {
        let (q, s) = (BigRational::from_integer(q.into()), BigRational::from_integer(if sign { s } else { -s }.into()));
        let ev = |p: &LaurentPoly| p.substitute(&q, &s).unwrap();
        prop_assert_eq!(ev(&(&a * &b)), ev(&a) * ev(&b));
        prop_assert_eq!(ev(&(&a + &b)), ev(&a) + ev(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// The transform kernel against the schoolbook product, including
    /// coefficients far beyond one machine word.
    #[test]
    fn multiplication_kernels_agree(a in poly_with(40, 30), b in poly_with(40, 30)) {
        let school = a.mul_with(&b, MulKernel::Schoolbook);
        prop_assert_eq!(a.mul_with(&b, MulKernel::Modular), school.clone());
        prop_assert_eq!(a.mul_with(&a, MulKernel::Modular), a.mul_with(&a, MulKernel::Schoolbook));
    }

    #[test]
    fn powers_match_repeated_products(a in poly_with(4, 3), e in 0u32..7) {
        let mut expected = LaurentPoly::one();
        for _ in 0..e {
            expected = &expected * &a;
        }
        prop_assert_eq!(a.pow(e), expected);
    }
}
