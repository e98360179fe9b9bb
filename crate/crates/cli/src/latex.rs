//! Grouped LaTeX rendering.
//!
//! An involution-fixed polynomial has its `s^{-b}` band equal to `q^{-b}`
//! times its `s^b` band, so it is written as
//! `(s^b + q^{-b} s^{-b}) (P_b(q))` for each `b > 0` plus the `s^0` band.
//! Anything else is rendered flat.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use lg_core::{LaurentPoly, Monomial};

fn power(var: &str, e: i32) -> String {
    match e {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{var}^{{{e}}}"),
    }
}

fn write_term(out: &mut String, first: bool, coeff: &BigInt, vars: &str) {
    let sign = if coeff.is_negative() { "-" } else { "+" };
    match (first, coeff.is_negative()) {
        (true, false) => {}
        (true, true) => out.push('-'),
        (false, _) => write!(out, " {sign} ").unwrap(),
    }
    let abs = coeff.abs();
    if vars.is_empty() {
        write!(out, "{abs}").unwrap();
    } else if abs.is_one() {
        out.push_str(vars);
    } else {
        write!(out, "{abs} {vars}").unwrap();
    }
}

fn vars(qexp: i32, sexp: i32) -> String {
    [power("q", qexp), power("s", sexp)]
        .into_iter()
        .filter(|v| !v.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn flat(terms: &[Monomial]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        write_term(&mut out, i == 0, &t.coeff, &vars(t.qexp, t.sexp));
    }
    out
}

pub fn render(p: &LaurentPoly) -> String {
    if p.is_zero() || !p.is_involution_fixed() {
        return flat(p.terms());
    }
    // Terms are in descending (s, q) order, so each band is contiguous and
    // already sorted by descending q.
    let mut bands: BTreeMap<i32, Vec<Monomial>> = BTreeMap::new();
    for t in p.terms().iter().filter(|t| t.sexp >= 0) {
        bands.entry(t.sexp).or_default().push(Monomial::new(t.coeff.clone(), t.qexp, 0));
    }
    let mut groups = Vec::new();
    for (b, band) in bands.iter().rev() {
        if *b == 0 {
            continue;
        }
        groups.push(format!(
            "\\left({} + {}\\right) \\left({}\\right)",
            power("s", *b),
            vars(-b, -b),
            flat(band)
        ));
    }
    let mut out = groups.join(" + ");
    if let Some(band) = bands.get(&0) {
        let rest = flat(band);
        if out.is_empty() {
            out = rest;
        } else if let Some(stripped) = rest.strip_prefix('-') {
            write!(out, " - {stripped}").unwrap();
        } else {
            write!(out, " + {rest}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> LaurentPoly {
        s.parse().unwrap()
    }

    #[test]
    fn flat_when_not_fixed() {
        assert_eq!(render(&p("2*q*s - s^-1 + 3")), "2 q s + 3 - s^{-1}");
        assert_eq!(render(&LaurentPoly::zero()), "0");
    }

    #[test]
    fn groups_conjugate_bands() {
        // (s^2 + q^-2 s^-2)(q - 1) + 5
        let x = p("q*s^2 - s^2 + q^-1*s^-2 - q^-2*s^-2 + 5");
        assert!(x.is_involution_fixed());
        assert_eq!(render(&x), "\\left(s^{2} + q^{-2} s^{-2}\\right) \\left(q - 1\\right) + 5");
        let y = p("s + q^-1*s^-1 - 7");
        assert_eq!(render(&y), "\\left(s + q^{-1} s^{-1}\\right) \\left(1\\right) - 7");
    }
}
