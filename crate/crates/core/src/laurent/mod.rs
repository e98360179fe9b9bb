//! Sparse Laurent polynomials in `q` and `s` with arbitrary-precision integer
//! coefficients.
//!
//! A [`LaurentPoly`] is a finite set of [`Monomial`]s with distinct exponent
//! pairs and nonzero coefficients, stored in canonical order: descending by
//! `s` exponent, then descending by `q` exponent. Every constructor
//! normalizes, so structural equality is polynomial equality.

mod divide;
mod ntt;
mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub(crate) use ntt::{bilinear, linear_small, power_combination, PowerCombination};

/// A single term `coeff * q^qexp * s^sexp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub coeff: BigInt,
    pub qexp: i32,
    pub sexp: i32,
}

impl Monomial {
    pub fn new(coeff: impl Into<BigInt>, qexp: i32, sexp: i32) -> Self {
        Monomial {
            coeff: coeff.into(),
            qexp,
            sexp,
        }
    }

    #[inline]
    fn key(&self) -> (i32, i32) {
        (self.sexp, self.qexp)
    }
}

/// Serialized as one structured triple `[coeff, qexp, sexp]`.
impl Serialize for Monomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        (self.coeff.to_str_radix(10), self.qexp, self.sexp).serialize(serializer)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff.is_negative() {
            f.write_str("-")?;
        }
        write_unsigned_term(f, &self.coeff.abs(), self.qexp, self.sexp)
    }
}

fn write_unsigned_term(f: &mut fmt::Formatter<'_>, abs: &BigInt, qexp: i32, sexp: i32) -> fmt::Result {
    let mut parts: Vec<String> = Vec::with_capacity(3);
    if !abs.is_one() || (qexp == 0 && sexp == 0) {
        parts.push(abs.to_string());
    }
    if qexp != 0 {
        parts.push(format!("q^{qexp}"));
    }
    if sexp != 0 {
        parts.push(format!("s^{sexp}"));
    }
    f.write_str(&parts.join("*"))
}

/// Which multiplication kernel to use. `Auto` picks the schoolbook kernel for
/// small operands and the multi-modular transform kernel for large ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MulKernel {
    #[default]
    Auto,
    Schoolbook,
    Modular,
}

/// Operand work (term-count product) above which `Auto` switches to the
/// modular kernel.
const MODULAR_THRESHOLD: usize = 1 << 14;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    terms: Vec<Monomial>,
}

#[inline]
fn canonical(a: &Monomial, b: &Monomial) -> Ordering {
    b.key().cmp(&a.key())
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn monomial(c: impl Into<BigInt>, qexp: i32, sexp: i32) -> Self {
        let c = c.into();
        if c.is_zero() {
            return Self::zero();
        }
        LaurentPoly {
            terms: vec![Monomial::new(c, qexp, sexp)],
        }
    }

    pub fn q() -> Self {
        Self::monomial(1, 1, 0)
    }

    pub fn s() -> Self {
        Self::monomial(1, 0, 1)
    }

    /// Builds a polynomial from arbitrary terms, combining repeated exponent
    /// pairs and dropping zeros.
    pub fn from_terms<I: IntoIterator<Item = Monomial>>(terms: I) -> Self {
        let mut terms: Vec<Monomial> = terms.into_iter().collect();
        terms.sort_by(canonical);
        let mut out: Vec<Monomial> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.key() == t.key() => last.coeff += t.coeff,
                _ => {
                    if let Some(last) = out.last() {
                        if last.coeff.is_zero() {
                            out.pop();
                        }
                    }
                    out.push(t);
                }
            }
        }
        if out.last().is_some_and(|t| t.coeff.is_zero()) {
            out.pop();
        }
        LaurentPoly { terms: out }
    }

    /// Wraps terms that are already canonical. Only used by kernels that emit
    /// terms in order with nonzero coefficients.
    fn from_canonical(terms: Vec<Monomial>) -> Self {
        debug_assert!(terms.windows(2).all(|w| canonical(&w[0], &w[1]) == Ordering::Less));
        debug_assert!(terms.iter().all(|t| !t.coeff.is_zero()));
        LaurentPoly { terms }
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Monomial> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].key() == (0, 0) && self.terms[0].coeff.is_one()
    }

    /// Coefficient of `q^qexp * s^sexp`.
    pub fn coeff(&self, qexp: i32, sexp: i32) -> BigInt {
        self.terms
            .binary_search_by(|t| (sexp, qexp).cmp(&t.key()))
            .map(|i| self.terms[i].coeff.clone())
            .unwrap_or_default()
    }

    /// `(min, max)` of the `s` exponents, `None` for zero.
    pub fn s_range(&self) -> Option<(i32, i32)> {
        Some((self.terms.last()?.sexp, self.terms.first()?.sexp))
    }

    /// `(min, max)` of the `q` exponents, `None` for zero.
    pub fn q_range(&self) -> Option<(i32, i32)> {
        let min = self.terms.iter().map(|t| t.qexp).min()?;
        let max = self.terms.iter().map(|t| t.qexp).max()?;
        Some((min, max))
    }

    /// Multiplies by the monomial `q^dq * s^ds`.
    pub fn shift(&self, dq: i32, ds: i32) -> Self {
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial::new(t.coeff.clone(), t.qexp + dq, t.sexp + ds))
                .collect(),
        }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial::new(&t.coeff * c, t.qexp, t.sexp))
                .collect(),
        }
    }

    /// Left to right, so every multiplication is by the (short) base.
    pub fn pow(&self, exp: u32) -> Self {
        if exp == 0 {
            return Self::one();
        }
        let mut acc = self.clone();
        for bit in (0..31 - exp.leading_zeros()).rev() {
            acc = &acc * &acc;
            if exp >> bit & 1 == 1 {
                acc = &acc * self;
            }
        }
        acc
    }

    pub fn mul_with(&self, other: &Self, kernel: MulKernel) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let use_modular = match kernel {
            MulKernel::Schoolbook => false,
            MulKernel::Modular => true,
            MulKernel::Auto => self.len().saturating_mul(other.len()) > MODULAR_THRESHOLD,
        };
        if use_modular {
            if std::ptr::eq(self, other) {
                let table = vec![vec![vec![Self::one()]]];
                return bilinear(&[self], &[self], &table, 1).pop().unwrap_or_default();
            }
            let (long, short) = if self.len() >= other.len() { (self, other) } else { (other, self) };
            linear_small(&[long], &[vec![short.clone()]], 1).pop().unwrap_or_default()
        } else {
            self.mul_schoolbook(other)
        }
    }

    fn mul_schoolbook(&self, other: &Self) -> Self {
        if self.len() == 1 || other.len() == 1 {
            let (m, p) = if self.len() == 1 { (&self.terms[0], other) } else { (&other.terms[0], self) };
            return LaurentPoly {
                terms: p
                    .terms
                    .iter()
                    .map(|t| Monomial::new(&t.coeff * &m.coeff, t.qexp + m.qexp, t.sexp + m.sexp))
                    .collect(),
            };
        }
        let (as0, as1) = self.s_range().unwrap();
        let (bs0, bs1) = other.s_range().unwrap();
        let (aq0, aq1) = self.q_range().unwrap();
        let (bq0, bq1) = other.q_range().unwrap();
        let rows = (as1 - as0 + bs1 - bs0 + 1) as usize;
        let width = (aq1 - aq0 + bq1 - bq0 + 1) as usize;
        let area = rows.saturating_mul(width);
        let work = self.len() * other.len();
        let (s0, q0) = (as0 + bs0, aq0 + bq0);
        if area <= 4 * work + 256 {
            let mut grid = vec![BigInt::zero(); area];
            for a in &self.terms {
                for b in &other.terms {
                    let r = (a.sexp + b.sexp - s0) as usize;
                    let c = (a.qexp + b.qexp - q0) as usize;
                    grid[r * width + c] += &a.coeff * &b.coeff;
                }
            }
            let terms = grid
                .into_iter()
                .enumerate()
                .rev()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| Monomial::new(c, q0 + (i % width) as i32, s0 + (i / width) as i32))
                .collect();
            LaurentPoly::from_canonical(terms)
        } else {
            let mut acc: HashMap<(i32, i32), BigInt> = HashMap::with_capacity(work.min(1 << 20));
            for a in &self.terms {
                for b in &other.terms {
                    *acc.entry((a.sexp + b.sexp, a.qexp + b.qexp)).or_default() += &a.coeff * &b.coeff;
                }
            }
            Self::from_terms(acc.into_iter().map(|((s, q), c)| Monomial::new(c, q, s)))
        }
    }

    /// Exact quotient in the Laurent ring: returns `r` with `r * den == self`.
    ///
    /// Both operands are shifted into `Z[q, s]` by their minimal exponents and
    /// divided there under graded lexicographic order with `q > s`.
    pub fn exact_div(&self, den: &Self) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        if let Some(result) = divide::dense_exact_div(self, den) {
            return result;
        }
        let (nq, ns) = (self.q_range().unwrap().0, self.s_range().unwrap().0);
        let (dq, ds) = (den.q_range().unwrap().0, den.s_range().unwrap().0);

        // Keys (total degree, q degree) sort ascending in grlex with q > s,
        // so the leading term is the last map entry.
        let grlex = |t: &Monomial, oq: i32, os: i32| {
            let (a, b) = (t.qexp - oq, t.sexp - os);
            ((a + b, a), t.coeff.clone())
        };
        let divisor: Vec<((i32, i32), BigInt)> = den.terms.iter().map(|t| grlex(t, dq, ds)).collect();
        let lead = divisor.iter().max_by_key(|(k, _)| *k).unwrap().clone();
        let mut rem: BTreeMap<(i32, i32), BigInt> = self.terms.iter().map(|t| grlex(t, nq, ns)).collect();
        let mut quotient = Vec::new();

        while let Some((&(deg, qd), coeff)) = rem.iter().next_back() {
            let coeff = coeff.clone();
            let (ldeg, lq) = lead.0;
            let (sd, lsd) = (deg - qd, ldeg - lq);
            if qd < lq || sd < lsd {
                return Err(Error::NotDivisible);
            }
            let (c, r) = coeff.div_rem(&lead.1);
            if !r.is_zero() {
                return Err(Error::NotDivisible);
            }
            let (mq, ms) = (qd - lq, sd - lsd);
            for ((tdeg, tq), tc) in &divisor {
                let key = (tdeg + mq + ms, tq + mq);
                let entry = rem.entry(key).or_default();
                *entry -= &c * tc;
                if entry.is_zero() {
                    rem.remove(&key);
                }
            }
            quotient.push(Monomial::new(c, mq + nq - dq, ms + ns - ds));
        }
        Ok(Self::from_terms(quotient))
    }

    /// Exact rational value at `q = q_val`, `s = s_val`.
    pub fn substitute(&self, q_val: &BigRational, s_val: &BigRational) -> Result<BigRational> {
        if q_val.is_zero() || s_val.is_zero() {
            return Err(Error::ZeroSubstitution);
        }
        let mut qpow: HashMap<i32, BigRational> = HashMap::new();
        let mut spow: HashMap<i32, BigRational> = HashMap::new();
        let mut acc = BigRational::zero();
        for t in &self.terms {
            let qp = qpow.entry(t.qexp).or_insert_with(|| q_val.pow(t.qexp)).clone();
            let sp = spow.entry(t.sexp).or_insert_with(|| s_val.pow(t.sexp));
            acc += BigRational::from_integer(t.coeff.clone()) * qp * &*sp;
        }
        Ok(acc)
    }

    /// Sets `q = 1`, leaving a Laurent polynomial in `s` alone.
    pub fn substitute_q1(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|t| Monomial::new(t.coeff.clone(), 0, t.sexp)))
    }

    /// The ring involution `s -> q^-1 s^-1`: `c q^a s^b -> c q^(a-b) s^(-b)`.
    pub fn apply_involution(&self) -> Self {
        let mut terms: Vec<Monomial> = self
            .terms
            .iter()
            .map(|t| Monomial::new(t.coeff.clone(), t.qexp - t.sexp, -t.sexp))
            .collect();
        terms.sort_by(canonical);
        LaurentPoly::from_canonical(terms)
    }

    pub fn is_involution_fixed(&self) -> bool {
        self.apply_involution() == *self
    }

    /// Canonical structured form: `[coeff, qexp, sexp]` triples in canonical order.
    pub fn to_structured(&self) -> Vec<(String, i32, i32)> {
        self.terms.iter().map(|t| (t.coeff.to_str_radix(10), t.qexp, t.sexp)).collect()
    }

    pub fn from_structured(triples: &[(String, i32, i32)]) -> Result<Self> {
        let mut terms = Vec::with_capacity(triples.len());
        for (c, q, s) in triples {
            let coeff: BigInt = c.parse().map_err(|_| Error::Parse {
                position: 0,
                message: format!("bad coefficient {c:?}"),
            })?;
            terms.push(Monomial::new(coeff, *q, *s));
        }
        Ok(Self::from_terms(terms))
    }

    /// Upper bound on `log2` of the sum of absolute coefficients; `-inf`
    /// for zero.
    pub(crate) fn l1_bits(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.max_bits() as f64 + (self.len() as f64).log2()
    }

    /// Upper bound on `log2` of the largest absolute coefficient.
    pub(crate) fn max_bits(&self) -> u64 {
        self.terms.iter().map(|t| t.coeff.bits()).max().unwrap_or(0)
    }
}

fn add_sorted(a: &[Monomial], b: &[Monomial], negate_b: bool) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let neg = |t: &Monomial| {
        if negate_b {
            Monomial::new(-&t.coeff, t.qexp, t.sexp)
        } else {
            t.clone()
        }
    };
    while i < a.len() && j < b.len() {
        match canonical(&a[i], &b[j]) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(neg(&b[j]));
                j += 1;
            }
            Ordering::Equal => {
                let c = if negate_b { &a[i].coeff - &b[j].coeff } else { &a[i].coeff + &b[j].coeff };
                if !c.is_zero() {
                    out.push(Monomial::new(c, a[i].qexp, a[i].sexp));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend(a[i..].iter().cloned());
    out.extend(b[j..].iter().map(neg));
    out
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        LaurentPoly::from_canonical(add_sorted(&self.terms, &rhs.terms, false))
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        LaurentPoly::from_canonical(add_sorted(&self.terms, &rhs.terms, true))
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.mul_with(rhs, MulKernel::Auto)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|t| Monomial::new(-&t.coeff, t.qexp, t.sexp)).collect(),
        }
    }
}

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(mut self) -> LaurentPoly {
        for t in &mut self.terms {
            t.coeff = -std::mem::take(&mut t.coeff);
        }
        self
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly { (&self).$m(&rhs) }
        }
        impl $tr<&LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: &LaurentPoly) -> LaurentPoly { (&self).$m(rhs) }
        }
        impl $tr<LaurentPoly> for &LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl AddAssign<&LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: &LaurentPoly) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&LaurentPoly> for LaurentPoly {
    fn sub_assign(&mut self, rhs: &LaurentPoly) {
        *self = &*self - rhs;
    }
}

impl std::iter::Sum for LaurentPoly {
    fn sum<I: Iterator<Item = LaurentPoly>>(iter: I) -> Self {
        iter.fold(LaurentPoly::zero(), |acc, p| acc + p)
    }
}

impl From<i64> for LaurentPoly {
    fn from(c: i64) -> Self {
        LaurentPoly::constant(c)
    }
}

impl From<Monomial> for LaurentPoly {
    fn from(m: Monomial) -> Self {
        LaurentPoly::from_terms([m])
    }
}

/// Canonical text form, e.g. `8*q^2*s^12 + 8*s^12 - 8*q^-2*s^12`.
impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            write_unsigned_term(f, &t.coeff.abs(), t.qexp, t.sexp)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for LaurentPoly {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse::parse_poly(s)
    }
}

impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for t in &self.terms {
            seq.serialize_element(&(t.coeff.to_str_radix(10), t.qexp, t.sexp))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let triples: Vec<(String, i32, i32)> = Vec::deserialize(deserializer)?;
        LaurentPoly::from_structured(&triples).map_err(D::Error::custom)
    }
}
