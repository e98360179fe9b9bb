//! The three-dimensional algebra of `End(V ⊗ V*)` in the ordered basis
//! `(ll, cc, xx)` under horizontal concatenation `⊠`.
//!
//! `⊠` is bilinear with structure constants read from the constants file.
//! It is commutative and associative with two-sided unit `cc`; `ll` is
//! nilpotent (`ll ⊠ ll = 0`).

use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::laurent::{bilinear, linear_small, power_combination, LaurentPoly, MulKernel, PowerCombination};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Ll,
    Cc,
    Xx,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Ll, Basis::Cc, Basis::Xx];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::Ll => "ll",
            Basis::Cc => "cc",
            Basis::Xx => "xx",
        }
    }
}

/// Components of an endomorphism in the basis `(ll, cc, xx)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EndoVec {
    pub ll: LaurentPoly,
    pub cc: LaurentPoly,
    pub xx: LaurentPoly,
}

impl EndoVec {
    pub fn new(ll: LaurentPoly, cc: LaurentPoly, xx: LaurentPoly) -> Self {
        EndoVec { ll, cc, xx }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(b: Basis) -> Self {
        let mut v = Self::zero();
        v[b] = LaurentPoly::one();
        v
    }

    pub fn ll() -> Self {
        Self::basis(Basis::Ll)
    }

    /// The `⊠` unit.
    pub fn cc() -> Self {
        Self::basis(Basis::Cc)
    }

    pub fn xx() -> Self {
        Self::basis(Basis::Xx)
    }

    pub fn coords(&self) -> [&LaurentPoly; 3] {
        [&self.ll, &self.cc, &self.xx]
    }

    pub fn from_coords([ll, cc, xx]: [LaurentPoly; 3]) -> Self {
        EndoVec { ll, cc, xx }
    }

    pub fn into_coords(self) -> [LaurentPoly; 3] {
        [self.ll, self.cc, self.xx]
    }

    pub fn map(&self, f: impl Fn(&LaurentPoly) -> LaurentPoly) -> Self {
        EndoVec::new(f(&self.ll), f(&self.cc), f(&self.xx))
    }

    pub fn is_zero(&self) -> bool {
        self.coords().iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, c: &LaurentPoly) -> Self {
        self.map(|x| x * c)
    }

    pub fn apply_involution(&self) -> Self {
        self.map(LaurentPoly::apply_involution)
    }

    pub fn is_involution_fixed(&self) -> bool {
        self.coords().iter().all(|c| c.is_involution_fixed())
    }

    /// Total number of terms over the three coordinates.
    pub fn len(&self) -> usize {
        self.coords().iter().map(|c| c.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }
}

impl std::ops::Index<Basis> for EndoVec {
    type Output = LaurentPoly;
    fn index(&self, b: Basis) -> &LaurentPoly {
        match b {
            Basis::Ll => &self.ll,
            Basis::Cc => &self.cc,
            Basis::Xx => &self.xx,
        }
    }
}

impl std::ops::IndexMut<Basis> for EndoVec {
    fn index_mut(&mut self, b: Basis) -> &mut LaurentPoly {
        match b {
            Basis::Ll => &mut self.ll,
            Basis::Cc => &mut self.cc,
            Basis::Xx => &mut self.xx,
        }
    }
}

impl Add for &EndoVec {
    type Output = EndoVec;
    fn add(self, rhs: &EndoVec) -> EndoVec {
        EndoVec::new(&self.ll + &rhs.ll, &self.cc + &rhs.cc, &self.xx + &rhs.xx)
    }
}

impl Sub for &EndoVec {
    type Output = EndoVec;
    fn sub(self, rhs: &EndoVec) -> EndoVec {
        EndoVec::new(&self.ll - &rhs.ll, &self.cc - &rhs.cc, &self.xx - &rhs.xx)
    }
}

impl fmt::Display for EndoVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ll: {}\ncc: {}\nxx: {}", self.ll, self.cc, self.xx)
    }
}

/// Serialized as a 3-element array in `(ll, cc, xx)` order.
impl Serialize for EndoVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (&self.ll, &self.cc, &self.xx).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EndoVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (ll, cc, xx) = <(LaurentPoly, LaurentPoly, LaurentPoly)>::deserialize(deserializer)?;
        Ok(EndoVec { ll, cc, xx })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerStrategy {
    /// Powers of the two characters of the split algebra (see
    /// [`Splitting`]); falls back to `Binary` when the table does not split.
    #[default]
    Split,
    /// Square-and-multiply with the structure constants.
    Binary,
    /// `n - 1` successive products; kept as a cross-check.
    Sequential,
}

impl PowerStrategy {
    pub const ALL: [PowerStrategy; 3] = [PowerStrategy::Split, PowerStrategy::Binary, PowerStrategy::Sequential];

    pub fn name(self) -> &'static str {
        match self {
            PowerStrategy::Split => "split",
            PowerStrategy::Binary => "binary",
            PowerStrategy::Sequential => "sequential",
        }
    }
}

impl std::str::FromStr for PowerStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PowerStrategy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown power strategy {s:?}"))
    }
}

/// Work (term-count product) above which `⊠` runs through the fused
/// transform kernel instead of nine separate polynomial products.
const FUSED_THRESHOLD: usize = 1 << 15;

/// Structure constants of `⊠`: `table[i][j]` is `i ⊠ j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisAlgebra {
    table: [[EndoVec; 3]; 3],
    /// `table` as nested coordinate vectors, the layout the transform kernel
    /// takes.
    flat: Vec<Vec<Vec<LaurentPoly>>>,
    splitting: Option<Splitting>,
}

impl BasisAlgebra {
    pub fn new(table: [[EndoVec; 3]; 3]) -> Self {
        let flat = table
            .iter()
            .map(|row| row.iter().map(|e| e.clone().into_coords().to_vec()).collect())
            .collect();
        let splitting = Splitting::detect(&table);
        BasisAlgebra { table, flat, splitting }
    }

    pub fn splitting(&self) -> Option<&Splitting> {
        self.splitting.as_ref()
    }

    pub fn product(&self, i: Basis, j: Basis) -> &EndoVec {
        &self.table[i.index()][j.index()]
    }

    pub fn table(&self) -> &[[EndoVec; 3]; 3] {
        &self.table
    }

    pub fn boxtimes(&self, f: &EndoVec, g: &EndoVec) -> EndoVec {
        self.boxtimes_with(f, g, MulKernel::Auto)
    }

    /// `f ⊠ g = Σ f_i g_j (i ⊠ j)`.
    pub fn boxtimes_with(&self, f: &EndoVec, g: &EndoVec, kernel: MulKernel) -> EndoVec {
        let fused = match kernel {
            MulKernel::Schoolbook => false,
            MulKernel::Modular => true,
            MulKernel::Auto => f.len().saturating_mul(g.len()) > FUSED_THRESHOLD,
        };
        if fused {
            let out = if std::ptr::eq(f, g) {
                let c = f.coords();
                bilinear(&c, &c, &self.flat, 3)
            } else {
                bilinear(&f.coords(), &g.coords(), &self.flat, 3)
            };
            let [ll, cc, xx]: [LaurentPoly; 3] = out.try_into().expect("three outputs");
            return EndoVec::new(ll, cc, xx);
        }
        let mut out = EndoVec::zero();
        for i in Basis::ALL {
            for j in Basis::ALL {
                let (fi, gj) = (&f[i], &g[j]);
                let c = self.product(i, j);
                if fi.is_zero() || gj.is_zero() || c.is_zero() {
                    continue;
                }
                let prod = fi.mul_with(gj, kernel);
                for k in Basis::ALL {
                    let ck = &c[k];
                    if ck.is_zero() {
                        continue;
                    }
                    if ck.is_one() {
                        out[k] += &prod;
                    } else {
                        out[k] += &prod.mul_with(ck, kernel);
                    }
                }
            }
        }
        out
    }

    /// `f^{⊠ n}`; `n = 0` gives the unit `cc`.
    pub fn boxtimes_pow(&self, f: &EndoVec, n: u64, strategy: PowerStrategy) -> EndoVec {
        match strategy {
            PowerStrategy::Split => match &self.splitting {
                Some(split) => split.pow(f, n),
                None => self.boxtimes_pow(f, n, PowerStrategy::Binary),
            },
            PowerStrategy::Sequential => {
                let mut acc = EndoVec::cc();
                for _ in 0..n {
                    acc = self.boxtimes(&acc, f);
                }
                acc
            }
            PowerStrategy::Binary => {
                let mut acc: Option<EndoVec> = None;
                let mut base = f.clone();
                let mut e = n;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = Some(match acc {
                            None => base.clone(),
                            Some(a) => self.boxtimes(&a, &base),
                        });
                    }
                    e >>= 1;
                    if e > 0 {
                        base = self.boxtimes(&base, &base);
                    }
                }
                acc.unwrap_or_else(EndoVec::cc)
            }
        }
    }
}

/// The algebra over the fraction field is `K[e]/(e^2) x K`.
///
/// Write `ll ⊠ xx = A ll` and `xx ⊠ xx = P ll + Q cc + R xx`, and set
/// `d = 2A - R`. When `d^2 = 4Q + R^2`, the element `z = 2 xx - R cc -
/// (2P/d) ll` satisfies `z ⊠ z = d^2 cc` and `ll ⊠ z = d ll`, so
/// `e± = (cc ± z/d)/2` are orthogonal idempotents with `ll` in the `e+`
/// part. For `f = a ll + b cc + c xx`,
///
/// ```text
/// f = λ e+ + ν e- + μ ll,   λ = b + A c,   ν = b + (R - A) c,   μ = a + P c/d
/// f^n = λ^n e+ + ν^n e- + n λ^(n-1) μ ll
/// ```
///
/// Back in the original basis, with `X = λ^(n-1)`, `Y = ν^(n-1)`,
/// `m = a d + P c`:
///
/// ```text
/// 2d^2 xx-part = 2d (λX - νY)
/// 2d^2 cc-part = d^2 (λX + νY) - R d (λX - νY)
/// 2d^2 ll-part = 2 n d m X - 2P (λX - νY)
/// ```
///
/// so a power costs two single-polynomial powers and one fused linear
/// combination, followed by exact division by `2d^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Splitting {
    a: LaurentPoly,
    p: LaurentPoly,
    r: LaurentPoly,
    d: LaurentPoly,
    /// The whole table, for coefficient bounds.
    table: [[EndoVec; 3]; 3],
}

impl Splitting {
    /// Checks the table has the shape above and the discriminant identity
    /// holds.
    pub fn detect(table: &[[EndoVec; 3]; 3]) -> Option<Splitting> {
        let [ll, cc, xx] = [0, 1, 2];
        let is_unit = |v: &EndoVec, b: Basis| *v == EndoVec::basis(b);
        if !table[ll][ll].is_zero()
            || !is_unit(&table[ll][cc], Basis::Ll)
            || !is_unit(&table[cc][ll], Basis::Ll)
            || !is_unit(&table[cc][cc], Basis::Cc)
            || !is_unit(&table[cc][xx], Basis::Xx)
            || !is_unit(&table[xx][cc], Basis::Xx)
            || table[ll][xx] != table[xx][ll]
            || !table[ll][xx].cc.is_zero()
            || !table[ll][xx].xx.is_zero()
        {
            return None;
        }
        let a = table[ll][xx].ll.clone();
        let EndoVec { ll: p, cc: q, xx: r } = table[xx][xx].clone();
        let d = &(&a + &a) - &r;
        if d.is_zero() || &d * &d != &q.scale(&BigInt::from(4)) + &(&r * &r) {
            return None;
        }
        Some(Splitting {
            a,
            p,
            r,
            d,
            table: table.clone(),
        })
    }

    /// `d = 2A - R`.
    pub fn discriminant(&self) -> &LaurentPoly {
        &self.d
    }

    /// The two characters `(λ, ν)` of `f`.
    pub fn characters(&self, f: &EndoVec) -> (LaurentPoly, LaurentPoly) {
        let lambda = &f.cc + &(&self.a * &f.xx);
        let nu = &f.cc + &(&(&self.r - &self.a) * &f.xx);
        (lambda, nu)
    }

    /// `f^{⊠ n}`.
    pub fn pow(&self, f: &EndoVec, n: u64) -> EndoVec {
        if n == 0 {
            return EndoVec::cc();
        }
        let [ll, cc, xx]: [LaurentPoly; 3] = self.outputs(f, n, true, None).try_into().expect("three outputs");
        EndoVec::new(ll, cc, xx)
    }

    /// `row` applied to `f^{⊠ n}`, without forming the power itself.
    pub fn pair_pow(&self, f: &EndoVec, n: u64, row: &RowVector) -> LaurentPoly {
        if n == 0 {
            return row.pair(&EndoVec::cc());
        }
        self.outputs(f, n, false, Some(row)).pop().expect("one output")
    }

    /// The requested outputs among `(ll, cc, xx, row)` of `f^{⊠ n}`, `n >= 1`.
    fn outputs(&self, f: &EndoVec, n: u64, vector: bool, row: Option<&RowVector>) -> Vec<LaurentPoly> {
        let exp = u32::try_from(n - 1).expect("power fits in u32");
        let (lambda, nu) = self.characters(f);
        let m = &(&f.ll * &self.d) + &(&self.p * &f.xx);
        let two = BigInt::from(2);
        let dd = &self.d * &self.d;
        let rd = &self.r * &self.d;
        // Multipliers of X and Y in 2d^2 times each coordinate.
        let ll = [
            &(&m * &self.d).scale(&(two.clone() * BigInt::from(n))) - &(&self.p * &lambda).scale(&two),
            (&self.p * &nu).scale(&two),
        ];
        let cc = [&(&dd - &rd) * &lambda, &(&dd + &rd) * &nu];
        let xx = [(&lambda * &self.d).scale(&two), -(&nu * &self.d).scale(&two)];
        let coords = [ll, cc, xx];
        let bits = power_bits(&self.table, f, n);

        let mut columns: Vec<[LaurentPoly; 2]> = Vec::new();
        let mut bound = f64::NEG_INFINITY;
        if vector {
            columns.extend(coords.iter().cloned());
            bound = bits.iter().cloned().fold(bound, f64::max);
        }
        if let Some(r) = row {
            let combine = |col: usize| -> LaurentPoly {
                (0..3).filter(|&k| !r.0[k].is_zero()).map(|k| &r.0[k] * &coords[k][col]).sum()
            };
            columns.push([combine(0), combine(1)]);
            let parts: Vec<f64> = (0..3).map(|k| r.0[k].l1_bits() + bits[k]).collect();
            bound = bound.max(log2_sum_exp(&parts));
        }
        let multipliers: Vec<Vec<LaurentPoly>> = (0..2)
            .map(|col| columns.iter().map(|c| c[col].clone()).collect())
            .collect();
        let den = dd.scale(&two);

        let fused = PowerCombination {
            bases: vec![&lambda, &nu],
            exponent: exp,
            multipliers,
            divisor: &den,
            bound_bits: bound.max(0.0) + 1.0,
        };
        if let Some(out) = power_combination(&fused) {
            return out;
        }
        // The divisor vanished at an evaluation point: go through coefficients.
        let x = lambda.pow(exp);
        let y = nu.pow(exp);
        linear_small(&[&x, &y], &fused.multipliers, columns.len())
            .into_iter()
            .map(|v| v.exact_div(&den).expect("split identities make the quotient exact"))
            .collect()
    }
}

/// `log2` of `sum 2^x`, `-inf` for an empty or all `-inf` input.
fn log2_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// Per-coordinate `log2` bounds on the l1 norms of `f^{⊠ n}`, from
/// `|f ⊠ g|_k <= sum_ij |f_i| |g_j| |(i ⊠ j)_k|` applied `n - 1` times.
fn power_bits(table: &[[EndoVec; 3]; 3], f: &EndoVec, n: u64) -> [f64; 3] {
    let fb = f.coords().map(LaurentPoly::l1_bits);
    let mut v = fb;
    for _ in 1..n {
        v = [0, 1, 2].map(|k| {
            let parts: Vec<f64> = (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| v[i] + fb[j] + table[i][j].coords()[k].l1_bits())
                .collect();
            log2_sum_exp(&parts)
        });
    }
    v
}

/// A linear functional on `End(V ⊗ V*)` given by its values on the basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowVector(pub [LaurentPoly; 3]);

impl RowVector {
    pub fn pair(&self, f: &EndoVec) -> LaurentPoly {
        self.0
            .iter()
            .zip(f.coords())
            .filter(|(a, x)| !a.is_zero() && !x.is_zero())
            .map(|(a, x)| a * x)
            .sum()
    }

    pub fn apply_involution(&self) -> Self {
        RowVector(self.0.clone().map(|p| p.apply_involution()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Constants;

    fn p(s: &str) -> LaurentPoly {
        s.parse().unwrap()
    }

    fn algebra() -> &'static BasisAlgebra {
        Constants::builtin().algebra()
    }

    #[test]
    fn table_spot_values() {
        let alg = algebra();
        assert_eq!(alg.boxtimes(&EndoVec::cc(), &EndoVec::xx()), EndoVec::xx());
        assert!(alg.boxtimes(&EndoVec::ll(), &EndoVec::ll()).is_zero());
        // <a><a+1>/q
        let a = p("s^2 - 1 - q^-2 + q^-2*s^-2");
        assert_eq!(alg.boxtimes(&EndoVec::ll(), &EndoVec::xx()), EndoVec::new(a, LaurentPoly::zero(), LaurentPoly::zero()));
    }

    #[test]
    fn xx_square_matches_grouped_form() {
        let sym1 = p("s^2 + q^-2*s^-2");
        let sym2 = p("s^4 + q^-4*s^-4");
        let ll = &(&sym1 * &p("1 + q^-2")) - &p("3*q^-2 + q^-4");
        let cc = &(&(-&sym2) + &(&sym1 * &p("3 + q^-2"))) - &p("2 + 4*q^-2");
        let xx = &(&sym1 * &p("2")) - &p("3 + q^-2");
        let sq = algebra().boxtimes(&EndoVec::xx(), &EndoVec::xx());
        assert_eq!(sq, EndoVec::new(ll, cc, xx));
    }

    #[test]
    fn power_edge_cases() {
        let alg = algebra();
        let f = EndoVec::new(p("q + s"), p("2"), p("q^-1*s^3"));
        assert_eq!(alg.boxtimes_pow(&f, 1, PowerStrategy::Binary), f);
        assert_eq!(alg.boxtimes_pow(&f, 0, PowerStrategy::Binary), EndoVec::cc());
        assert_eq!(alg.boxtimes_pow(&f, 0, PowerStrategy::Sequential), EndoVec::cc());
        for k in 0..6 {
            assert_eq!(alg.boxtimes_pow(&EndoVec::cc(), k, PowerStrategy::Binary), EndoVec::cc());
        }
        assert_eq!(alg.boxtimes_pow(&f, 2, PowerStrategy::Binary), alg.boxtimes(&f, &f));
        assert_eq!(
            alg.boxtimes_pow(&f, 7, PowerStrategy::Binary),
            alg.boxtimes_pow(&f, 7, PowerStrategy::Sequential)
        );
    }

    #[test]
    fn table_splits() {
        let split = algebra().splitting().expect("table splits");
        assert_eq!(split.discriminant(), &p("1 - q^-2"));
        let (lambda, nu) = split.characters(&EndoVec::ll());
        assert!(lambda.is_zero() && nu.is_zero());
    }

    #[test]
    fn split_powers_match_binary() {
        let alg = algebra();
        let fs = [
            EndoVec::new(p("q + s"), p("2"), p("q^-1*s^3")),
            EndoVec::new(p("0"), p("1 - s^2"), p("3*q^2")),
            EndoVec::ll(),
            EndoVec::xx(),
        ];
        for f in &fs {
            for n in 0..7 {
                assert_eq!(
                    alg.boxtimes_pow(f, n, PowerStrategy::Split),
                    alg.boxtimes_pow(f, n, PowerStrategy::Binary),
                    "n = {n}, f = {f}"
                );
            }
        }
        let split = alg.splitting().unwrap();
        let row = Constants::builtin().as_star();
        for n in 0..5 {
            let v = split.pow(&fs[0], n);
            assert_eq!(split.pair_pow(&fs[0], n, row), row.pair(&v));
        }
    }

    #[test]
    fn non_splitting_table_falls_back() {
        let mut table = algebra().table().clone();
        table[2][2].cc = &table[2][2].cc + &LaurentPoly::one();
        let alg = BasisAlgebra::new(table);
        assert!(alg.splitting().is_none());
        let f = EndoVec::new(p("1"), p("s"), p("q"));
        assert_eq!(alg.boxtimes_pow(&f, 3, PowerStrategy::Split), alg.boxtimes_pow(&f, 3, PowerStrategy::Sequential));
    }

    #[test]
    fn fused_kernel_matches_schoolbook() {
        let alg = algebra();
        let c = Constants::builtin();
        let t = alg.boxtimes(c.tt_plus(), c.tt_minus());
        let t2 = alg.boxtimes_with(&t, &t, MulKernel::Schoolbook);
        assert_eq!(alg.boxtimes_with(&t, &t, MulKernel::Modular), t2);
        assert_eq!(alg.boxtimes_with(&t2, &t, MulKernel::Modular), alg.boxtimes_with(&t2, &t, MulKernel::Schoolbook));
    }

    #[test]
    fn pairing_is_linear() {
        let star = Constants::builtin().as_star();
        assert!(star.pair(&EndoVec::zero()).is_zero());
        let sum = &EndoVec::ll() + &EndoVec::cc();
        assert_eq!(star.pair(&sum), &star.0[0] + &star.0[1]);
        let expected = p("s^4 + q^-4*s^-4 - 2*s^2 - 2*q^-2*s^2 - 2*q^-2*s^-2 - 2*q^-4*s^-2 + 1 + 4*q^-2 + q^-4");
        assert_eq!(star.pair(&EndoVec::cc()), expected);
    }

    #[test]
    fn endovec_serializes_as_triple() {
        let v = EndoVec::new(p("s"), LaurentPoly::zero(), p("-2*q"));
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"[[["1",0,1]],[],[["-2",1,0]]]"#);
        assert_eq!(serde_json::from_str::<EndoVec>(&json).unwrap(), v);
    }
}
