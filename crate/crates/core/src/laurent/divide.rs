//! Exact division by a short divisor through Kronecker packing.
//!
//! With `s` rows of width `W` greater than the numerator's `q`-span, packing
//! `q -> x`, `s -> x^W` is a ring map that is injective on everything the
//! division touches, so univariate long division on a dense array gives the
//! bivariate quotient. Exponent lattices with a common stride are compressed
//! first.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{LaurentPoly, Monomial};
use crate::error::{Error, Result};

/// Divisors longer than this go through the generic routine.
const MAX_DIVISOR_TERMS: usize = 64;

struct Lattice {
    q0: i32,
    s0: i32,
    qstride: i32,
    sstride: i32,
}

fn lattice(p: &LaurentPoly) -> Lattice {
    let (q0, _) = p.q_range().unwrap();
    let (s0, _) = p.s_range().unwrap();
    let (mut qs, mut ss) = (0i32, 0i32);
    for t in p.terms() {
        qs = qs.gcd(&(t.qexp - q0));
        ss = ss.gcd(&(t.sexp - s0));
    }
    Lattice {
        q0,
        s0,
        qstride: qs,
        sstride: ss,
    }
}

/// `None` when the dense route does not apply (divisor too long, or the
/// dense array would be much larger than the numerator).
pub(super) fn dense_exact_div(num: &LaurentPoly, den: &LaurentPoly) -> Option<Result<LaurentPoly>> {
    if den.len() > MAX_DIVISOR_TERMS || num.len() < 2 * den.len() {
        return None;
    }
    let (n, d) = (lattice(num), lattice(den));
    let gcd0 = |a: i32, b: i32| match a.gcd(&b) {
        0 => 1,
        g => g,
    };
    let qstride = gcd0(n.qstride, d.qstride);
    let sstride = gcd0(n.sstride, d.sstride);
    // Quotient exponents are offsets from (n.q0 - d.q0, n.s0 - d.s0).
    let (nq1, ns1) = (num.q_range().unwrap().1, num.s_range().unwrap().1);
    let (dq1, ds1) = (den.q_range().unwrap().1, den.s_range().unwrap().1);
    if nq1 - n.q0 < dq1 - d.q0 || ns1 - n.s0 < ds1 - d.s0 {
        return Some(Err(Error::NotDivisible));
    }
    let width = ((nq1 - n.q0) / qstride) as usize + 1;
    let rows = ((ns1 - n.s0) / sstride) as usize + 1;
    let len = width.checked_mul(rows)?;
    if len > 8 * num.len() + 1024 {
        return None;
    }
    let index = |t: &Monomial, l: &Lattice| -> usize {
        ((t.sexp - l.s0) / sstride) as usize * width + ((t.qexp - l.q0) / qstride) as usize
    };

    let mut rem = vec![BigInt::zero(); len];
    for t in num.terms() {
        rem[index(t, &n)] = t.coeff.clone();
    }
    let divisor: Vec<(usize, &BigInt)> = den.terms().iter().map(|t| (index(t, &d), &t.coeff)).collect();
    // Canonical order puts the packed maximum first.
    let (top, lead) = divisor[0];
    let unit = lead.abs().is_one();
    let negative = lead.is_negative();

    let mut quotient: Vec<(usize, BigInt)> = Vec::new();
    for idx in (top..len).rev() {
        if rem[idx].is_zero() {
            continue;
        }
        let c = if unit {
            let c = std::mem::take(&mut rem[idx]);
            if negative {
                -c
            } else {
                c
            }
        } else {
            let (c, r) = rem[idx].div_rem(lead);
            if !r.is_zero() {
                return Some(Err(Error::NotDivisible));
            }
            rem[idx] = BigInt::zero();
            c
        };
        let shift = idx - top;
        for &(di, dc) in &divisor[1..] {
            rem[di + shift] -= &c * dc;
        }
        quotient.push((shift, c));
    }
    if rem[..top].iter().any(|c| !c.is_zero()) {
        return Some(Err(Error::NotDivisible));
    }
    // The packing is injective on the product only if the row widths add up.
    let qmax = quotient.iter().map(|(i, _)| i % width).max().unwrap_or(0);
    let dmax = divisor.iter().map(|(i, _)| i % width).max().unwrap_or(0);
    if qmax + dmax >= width {
        return Some(Err(Error::NotDivisible));
    }
    let (oq, os) = (n.q0 - d.q0, n.s0 - d.s0);
    let terms = quotient
        .into_iter()
        .map(|(i, c)| {
            let qexp = oq + (i % width) as i32 * qstride;
            let sexp = os + (i / width) as i32 * sstride;
            Monomial::new(c, qexp, sexp)
        })
        .collect::<Vec<_>>();
    Some(Ok(LaurentPoly::from_terms(terms)))
}
