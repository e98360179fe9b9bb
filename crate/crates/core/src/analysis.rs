//! Extremal terms, `s`-span, the closed-form leading/trailing terms and the
//! genus of the links `AS(n)`.
//!
//! Convention for extremal terms: the leading term is the top `q`-term of the
//! top `s`-band, the trailing term is the top `q`-term of the bottom
//! `s`-band. The second rule is what makes the trailing term the involution
//! image of the leading one.

use num_bigint::BigInt;
use serde::Serialize;

use crate::basis::{EndoVec, RowVector};
use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::laurent::{LaurentPoly, Monomial};

/// Number of components of every `AS(n)`.
pub const COMPONENTS: i64 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TermSummary {
    pub leading: Monomial,
    pub trailing: Monomial,
    pub s_span: i64,
}

pub fn summarize(p: &LaurentPoly) -> Result<TermSummary> {
    let terms = p.terms();
    // Canonical order is descending in (sexp, qexp).
    let leading = terms.first().ok_or(Error::ZeroPolynomial)?.clone();
    let bottom = terms.last().unwrap().sexp;
    let trailing = terms.iter().find(|t| t.sexp == bottom).unwrap().clone();
    Ok(TermSummary {
        s_span: leading.sexp as i64 - bottom as i64,
        leading,
        trailing,
    })
}

/// `(n + 1) 4^n`, the coefficient of both extremal terms.
fn extremal_coefficient(n: u64) -> BigInt {
    BigInt::from(n + 1) * (BigInt::from(1) << (2 * n) as usize)
}

/// `span_s = 4 (4n + 2)`.
pub fn predicted_span(n: u64) -> i64 {
    4 * (4 * n as i64 + 2)
}

/// Closed forms: leading `(n+1) 4^n q^{2n} s^{4+8n}`, trailing
/// `(n+1) 4^n q^{-4-6n} s^{-4-8n}`, span `4(4n+2)`.
pub fn predicted_extremes(n: u64) -> TermSummary {
    let (n32, c) = (n as i32, extremal_coefficient(n));
    TermSummary {
        leading: Monomial::new(c.clone(), 2 * n32, 4 + 8 * n32),
        trailing: Monomial::new(c, -4 - 6 * n32, -4 - 8 * n32),
        s_span: predicted_span(n),
    }
}

/// Leading-order sequence `(T^n_ll, T^n_cc)` under the truncated product:
/// only the `ll` and `cc` parts feed the top `s`-band, so
///
/// ```text
/// T^{n+1}_ll = T_cc T^n_ll + T_ll T^n_cc
/// T^{n+1}_cc = T_cc T^n_cc
/// ```
///
/// with `T` and `S` the transcribed truncations of `TT+ ⊠ TT-` and `AS*`.
/// Yields the leading monomial of `S_ll T^n_ll + S_cc T^n_cc` for
/// `n = 1, 2, ...`.
pub struct AsymptoticOracle {
    t: EndoVec,
    s: RowVector,
    ll: LaurentPoly,
    cc: LaurentPoly,
}

impl AsymptoticOracle {
    pub fn new(constants: &Constants) -> Self {
        let (t, s) = constants.leading_truncations();
        AsymptoticOracle {
            t: t.clone(),
            s: s.clone(),
            ll: LaurentPoly::zero(),
            cc: LaurentPoly::one(),
        }
    }
}

impl Iterator for AsymptoticOracle {
    type Item = Monomial;

    fn next(&mut self) -> Option<Monomial> {
        let ll = &(&self.t.cc * &self.ll) + &(&self.t.ll * &self.cc);
        self.cc = &self.t.cc * &self.cc;
        self.ll = ll;
        let lg = &(&self.s.0[0] * &self.ll) + &(&self.s.0[1] * &self.cc);
        lg.terms().first().cloned()
    }
}

pub fn asymptotic_oracle(n: u64) -> Monomial {
    assert!(n >= 1, "the oracle starts at n = 1");
    AsymptoticOracle::new(Constants::builtin())
        .nth(n as usize - 1)
        .expect("leading terms never cancel")
}

/// Seifert-surface bookkeeping for `AS(n)`: the surface from the standard
/// diagram has `6 + 2(n-1)` disks and `11 + 6(n-1)` bands.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenusReport {
    pub n: u64,
    pub mu: i64,
    /// `2 genus + mu - 1` forced by `span_s <= 4 (2 genus + mu - 1)`, from
    /// the predicted span, or the computed one when supplied.
    pub span_lower_bound_quantity: i64,
    pub seifert_disks: i64,
    pub seifert_handles: i64,
    pub one_minus_chi: i64,
    pub genus: i64,
    /// The span the bound was taken from, when it came from a computation.
    pub computed_span: Option<i64>,
}

impl GenusReport {
    /// Whether the surface attains the span bound, which pins the genus.
    pub fn is_sharp(&self) -> bool {
        self.span_lower_bound_quantity == self.one_minus_chi
    }
}

pub fn genus(n: u64) -> GenusReport {
    genus_with_span(n, None)
}

pub fn genus_with_span(n: u64, computed_span: Option<i64>) -> GenusReport {
    assert!(n >= 1, "AS(n) needs n >= 1");
    let n_ = n as i64;
    let k = 6 + 2 * (n_ - 1);
    let l = 11 + 6 * (n_ - 1);
    let one_minus_chi = 1 - k + l;
    let span = computed_span.unwrap_or_else(|| predicted_span(n));
    GenusReport {
        n,
        mu: COMPONENTS,
        span_lower_bound_quantity: (span + 3) / 4,
        seifert_disks: k,
        seifert_handles: l,
        one_minus_chi,
        genus: (one_minus_chi + 1 - COMPONENTS) / 2,
        computed_span,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> LaurentPoly {
        s.parse().unwrap()
    }

    #[test]
    fn summary_of_small_polynomials() {
        let s = summarize(&p("s - s^-1")).unwrap();
        assert_eq!(s.leading, Monomial::new(1, 0, 1));
        assert_eq!(s.trailing, Monomial::new(-1, 0, -1));
        assert_eq!(s.s_span, 2);
        assert!(matches!(summarize(&LaurentPoly::zero()), Err(Error::ZeroPolynomial)));
        // Ties inside a band go to the larger q-exponent at both ends.
        let s = summarize(&p("q*s^2 + q^3*s^2 + q^-1 + q^5")).unwrap();
        assert_eq!(s.leading, Monomial::new(1, 3, 2));
        assert_eq!(s.trailing, Monomial::new(1, 5, 0));
    }

    #[test]
    fn closed_forms() {
        let e = predicted_extremes(1);
        assert_eq!(e.leading, Monomial::new(8, 2, 12));
        assert_eq!(e.trailing, Monomial::new(8, -10, -12));
        assert_eq!(e.s_span, 24);
        assert_eq!(predicted_extremes(3).leading, Monomial::new(256, 6, 28));
    }

    #[test]
    fn oracle_first_terms() {
        assert_eq!(asymptotic_oracle(1), Monomial::new(8, 2, 12));
        assert_eq!(asymptotic_oracle(2), Monomial::new(48, 4, 20));
    }

    #[test]
    fn genus_table() {
        let g = genus(1);
        assert_eq!((g.seifert_disks, g.seifert_handles, g.one_minus_chi, g.genus), (6, 11, 6, 2));
        let g = genus(2);
        assert_eq!((g.seifert_disks, g.seifert_handles, g.one_minus_chi, g.genus), (8, 17, 10, 4));
        assert!(g.is_sharp());
        for n in 1..=100 {
            let g = genus(n);
            assert_eq!(g.genus, 2 * n as i64);
            assert_eq!(g.one_minus_chi, 4 * n as i64 + 2);
        }
    }
}
