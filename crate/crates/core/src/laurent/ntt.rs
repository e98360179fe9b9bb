//! Multi-modular transform kernel.
//!
//! Computes sums of products `out[k] = sum_{i,j} f[i] * g[j] * c[i][j][k]`
//! exactly: every operand is packed into a one-dimensional array by Kronecker
//! substitution, each product is formed pointwise after a number-theoretic
//! transform modulo several primes `p = c * 2^32 + 1` in `[2^61, 2^62)`, and
//! the coefficients are recovered by Chinese remaindering in the symmetric
//! range. Enough primes are taken to cover twice a proven coefficient bound,
//! so the result is exact, never probabilistic.

use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::Zero;

use super::{LaurentPoly, Monomial};

/// Montgomery arithmetic modulo a 62-bit prime with `R = 2^64`.
#[derive(Clone, Copy, Debug)]
struct Field {
    p: u64,
    /// `-p^-1 mod 2^64`
    pinv_neg: u64,
    /// `R^2 mod p`
    r2: u64,
    /// Montgomery form of an element of order exactly `2^32`.
    root: u64,
}

const TWO_ADICITY: u32 = 32;

impl Field {
    fn new(p: u64, generator_order_root: u64) -> Field {
        let mut inv = p;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r as u128 * r as u128) % p as u128) as u64;
        let mut f = Field {
            p,
            pinv_neg: inv.wrapping_neg(),
            r2,
            root: 0,
        };
        f.root = f.to_mont(generator_order_root);
        f
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.pinv_neg);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline(always)]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline(always)]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    fn to_mont(self, x: u64) -> u64 {
        self.mul(x % self.p, self.r2)
    }

    fn one(&self) -> u64 {
        self.to_mont(1)
    }

    fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Montgomery form of `x^-1` for `x` in Montgomery form.
    fn inv(&self, x: u64) -> u64 {
        self.pow(x, self.p - 2)
    }

    /// Residue of a big integer, in Montgomery form.
    fn reduce(&self, c: &BigInt) -> u64 {
        let mut acc = 0u64;
        for d in c.magnitude().iter_u64_digits().rev() {
            // acc * 2^64 + d
            acc = self.add(self.mul(acc, self.r2), d % self.p);
        }
        let r = self.to_mont(acc);
        if c.sign() == Sign::Minus && r != 0 {
            self.p - r
        } else {
            r
        }
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let (mut d, mut r) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The first `count` primes `c * 2^32 + 1` below `2^62`, in descending order.
fn fields(count: usize) -> Vec<Field> {
    static CACHE: Mutex<Vec<Field>> = Mutex::new(Vec::new());
    let mut cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = cache.last().map_or(1u64 << 30, |f| (f.p - 1) >> TWO_ADICITY);
    while cache.len() < count {
        c -= 1;
        assert!(c >= 1 << 29, "ran out of transform primes");
        let p = (c << TWO_ADICITY) + 1;
        if !is_prime(p) {
            continue;
        }
        let root = (2u64..)
            .map(|g| powmod(g, c, p))
            .find(|&w| powmod(w, 1 << (TWO_ADICITY - 1), p) != 1)
            .expect("generator exists");
        cache.push(Field::new(p, root));
    }
    cache[..count].to_vec()
}

/// Twiddles for a transform of length `n`, laid out so the butterflies at
/// half-width `h` read `w[h..2h]` (powers of a primitive `2h`-th root), in
/// plain (non-Montgomery) form with Shoup quotients `floor(w * 2^64 / p)`.
struct Twiddles {
    w: Vec<u64>,
    wq: Vec<u64>,
}

impl Twiddles {
    fn new(f: &Field, n: usize, inverse: bool) -> Twiddles {
        let n = n.max(2);
        let mut w = vec![0u64; n];
        let mut wq = vec![0u64; n];
        let mut h = 1;
        while h < n {
            let mut root = f.pow(f.root, (1u64 << TWO_ADICITY) / (2 * h as u64));
            if inverse {
                root = f.inv(root);
            }
            let mut x = f.one();
            for j in 0..h {
                // With x = w R mod p reduced, floor(w 2^64 / p) = (w R - x) / p,
                // which is -x p^-1 mod 2^64.
                w[h + j] = f.redc(x as u128);
                wq[h + j] = x.wrapping_mul(f.pinv_neg);
                x = f.mul(x, root);
            }
            h *= 2;
        }
        Twiddles { w, wq }
    }
}

/// `a * w mod p` up to one extra `p`, for any `a < 2^64`.
#[inline(always)]
fn mul_shoup(a: u64, w: u64, wq: u64, p: u64) -> u64 {
    let q = ((a as u128 * wq as u128) >> 64) as u64;
    a.wrapping_mul(w).wrapping_sub(q.wrapping_mul(p))
}

/// Working set that fits in cache; levels below this run block by block.
const BLOCK: usize = 1 << 14;

/// One decimation-in-frequency level of half-width `h`. Values stay in
/// `[0, 2p)`.
#[inline(always)]
fn dif_level(a: &mut [u64], h: usize, tw: &Twiddles, p: u64) {
    let p2 = 2 * p;
    let (w, wq) = (&tw.w[h..2 * h], &tw.wq[h..2 * h]);
    for block in a.chunks_exact_mut(2 * h) {
        let (lo, hi) = block.split_at_mut(h);
        for (((x, y), &w), &wq) in lo.iter_mut().zip(hi.iter_mut()).zip(w).zip(wq) {
            let (u, v) = (*x, *y);
            let s = u + v;
            *x = if s >= p2 { s - p2 } else { s };
            *y = mul_shoup(u + p2 - v, w, wq, p);
        }
    }
}

/// Two DIF levels (half-widths `2q` and `q`) in one pass.
fn dif_level_pair(a: &mut [u64], q: usize, tw: &Twiddles, p: u64) {
    let p2 = 2 * p;
    let red = |s: u64| if s >= p2 { s - p2 } else { s };
    for block in a.chunks_exact_mut(4 * q) {
        let (b01, b23) = block.split_at_mut(2 * q);
        let (b0, b1) = b01.split_at_mut(q);
        let (b2, b3) = b23.split_at_mut(q);
        for j in 0..q {
            let (a0, a1, a2, a3) = (b0[j], b1[j], b2[j], b3[j]);
            let c0 = red(a0 + a2);
            let c2 = mul_shoup(a0 + p2 - a2, tw.w[2 * q + j], tw.wq[2 * q + j], p);
            let c1 = red(a1 + a3);
            let c3 = mul_shoup(a1 + p2 - a3, tw.w[3 * q + j], tw.wq[3 * q + j], p);
            let (w, wq) = (tw.w[q + j], tw.wq[q + j]);
            b0[j] = red(c0 + c1);
            b1[j] = mul_shoup(c0 + p2 - c1, w, wq, p);
            b2[j] = red(c2 + c3);
            b3[j] = mul_shoup(c2 + p2 - c3, w, wq, p);
        }
    }
}

/// Decimation in frequency: natural order in, bit-reversed order out. Input
/// below `2p`, output below `p`.
fn forward(a: &mut [u64], f: &Field, tw: &Twiddles) {
    let n = a.len();
    let p = f.p;
    let mut h = n / 2;
    while h >= BLOCK {
        if h / 2 >= BLOCK {
            dif_level_pair(a, h / 2, tw, p);
            h /= 4;
        } else {
            dif_level(a, h, tw, p);
            h /= 2;
        }
    }
    let block = n.min(BLOCK);
    for chunk in a.chunks_exact_mut(block) {
        let mut h = h;
        while h >= 1 {
            dif_level(chunk, h, tw, p);
            h /= 2;
        }
    }
    for x in a.iter_mut() {
        let y = if *x >= 2 * p { *x - 2 * p } else { *x };
        *x = if y >= p { y - p } else { y };
    }
}

/// One decimation-in-time level of half-width `h`. Inputs below `4p`,
/// outputs below `4p`.
#[inline(always)]
fn dit_level(a: &mut [u64], h: usize, tw: &Twiddles, p: u64) {
    let p2 = 2 * p;
    let (w, wq) = (&tw.w[h..2 * h], &tw.wq[h..2 * h]);
    for block in a.chunks_exact_mut(2 * h) {
        let (lo, hi) = block.split_at_mut(h);
        for (((x, y), &w), &wq) in lo.iter_mut().zip(hi.iter_mut()).zip(w).zip(wq) {
            let u = if *x >= p2 { *x - p2 } else { *x };
            let t = mul_shoup(*y, w, wq, p);
            *x = u + t;
            *y = u + p2 - t;
        }
    }
}

/// Two DIT levels (half-widths `q` then `2q`) in one pass.
fn dit_level_pair(a: &mut [u64], q: usize, tw: &Twiddles, p: u64) {
    let p2 = 2 * p;
    let red = |s: u64| if s >= p2 { s - p2 } else { s };
    let (w1, wq1) = (&tw.w[q..2 * q], &tw.wq[q..2 * q]);
    let (w2, wq2) = (&tw.w[2 * q..3 * q], &tw.wq[2 * q..3 * q]);
    let (w3, wq3) = (&tw.w[3 * q..4 * q], &tw.wq[3 * q..4 * q]);
    for block in a.chunks_exact_mut(4 * q) {
        let (b01, b23) = block.split_at_mut(2 * q);
        let (b0, b1) = b01.split_at_mut(q);
        let (b2, b3) = b23.split_at_mut(q);
        for j in 0..q {
            let t1 = mul_shoup(b1[j], w1[j], wq1[j], p);
            let t3 = mul_shoup(b3[j], w1[j], wq1[j], p);
            let (u0, u2) = (red(b0[j]), red(b2[j]));
            let (c0, c1) = (red(u0 + t1), u0 + p2 - t1);
            let (c2, c3) = (u2 + t3, u2 + p2 - t3);
            let v2 = mul_shoup(c2, w2[j], wq2[j], p);
            let v3 = mul_shoup(c3, w3[j], wq3[j], p);
            let c1 = red(c1);
            b0[j] = c0 + v2;
            b2[j] = c0 + p2 - v2;
            b1[j] = c1 + v3;
            b3[j] = c1 + p2 - v3;
        }
    }
}

/// Decimation in time with inverse twiddles: bit-reversed in, natural out,
/// unscaled. Input below `2p`, output below `p`.
fn inverse(a: &mut [u64], f: &Field, itw: &Twiddles) {
    let n = a.len();
    let p = f.p;
    let block = n.min(BLOCK);
    for chunk in a.chunks_exact_mut(block) {
        let mut h = 1;
        while h < block {
            dit_level(chunk, h, itw, p);
            h *= 2;
        }
    }
    let mut h = block;
    while h < n {
        if 2 * h < n {
            dit_level_pair(a, h, itw, p);
            h *= 4;
        } else {
            dit_level(a, h, itw, p);
            h *= 2;
        }
    }
    for x in a.iter_mut() {
        let y = if *x >= 2 * p { *x - 2 * p } else { *x };
        *x = if y >= p { y - p } else { y };
    }
}

/// Exponent lattice of one operand group: bounding box and per-variable
/// stride.
#[derive(Clone, Copy, Debug)]
struct Group {
    s0: i32,
    q0: i32,
    s1: i32,
    q1: i32,
}

impl Group {
    fn of<'a>(polys: impl Iterator<Item = &'a LaurentPoly>) -> Option<(Group, i32, i32)> {
        let mut g: Option<Group> = None;
        let mut terms: Vec<&Monomial> = Vec::new();
        for p in polys {
            for t in p.terms() {
                terms.push(t);
                let e = g.get_or_insert(Group {
                    s0: t.sexp,
                    q0: t.qexp,
                    s1: t.sexp,
                    q1: t.qexp,
                });
                e.s0 = e.s0.min(t.sexp);
                e.s1 = e.s1.max(t.sexp);
                e.q0 = e.q0.min(t.qexp);
                e.q1 = e.q1.max(t.qexp);
            }
        }
        let g = g?;
        let (mut ss, mut qs) = (0i32, 0i32);
        for t in terms {
            ss = ss.gcd(&(t.sexp - g.s0));
            qs = qs.gcd(&(t.qexp - g.q0));
        }
        Some((g, ss, qs))
    }
}

/// Kronecker packing shared by all operands of one call.
struct Frame {
    sstride: i32,
    qstride: i32,
    width: usize,
}

impl Frame {
    fn new(strides: &[(i32, i32)]) -> Frame {
        let (s, q) = strides.iter().fold((0i32, 0i32), |(s, q), &(a, b)| (s.gcd(&a), q.gcd(&b)));
        Frame {
            sstride: s.max(1),
            qstride: q.max(1),
            width: 0,
        }
    }

    fn rows(&self, g: &Group) -> usize {
        ((g.s1 - g.s0) / self.sstride) as usize + 1
    }

    fn cols(&self, g: &Group) -> usize {
        ((g.q1 - g.q0) / self.qstride) as usize + 1
    }

    /// Packed length of a group.
    fn extent(&self, g: &Group) -> usize {
        (self.rows(g) - 1) * self.width + self.cols(g)
    }

    #[inline]
    fn index(&self, g: &Group, t: &Monomial) -> usize {
        let r = ((t.sexp - g.s0) / self.sstride) as usize;
        let c = ((t.qexp - g.q0) / self.qstride) as usize;
        r * self.width + c
    }

    /// Unpacks index `idx` of a product whose exponents start at `(s0, q0)`.
    fn monomial(&self, idx: usize, s0: i32, q0: i32, coeff: BigInt) -> Monomial {
        let sexp = s0 + (idx / self.width) as i32 * self.sstride;
        let qexp = q0 + (idx % self.width) as i32 * self.qstride;
        Monomial::new(coeff, qexp, sexp)
    }
}

/// `log2` upper bounds on the l1 and max norms of a polynomial.
fn norms(p: &LaurentPoly) -> (f64, f64) {
    let linf = p.max_bits() as f64;
    (linf + (p.len().max(1) as f64).log2(), linf)
}

fn log2_sum(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + (xs.len().max(1) as f64).log2()
}

/// Bits of `|a b c|_inf`, bounded by `|a|_1 |b|_inf |c|_1` either way round.
fn product_bits(a: &LaurentPoly, b: &LaurentPoly, c: &LaurentPoly) -> f64 {
    let (a1, ainf) = norms(a);
    let (b1, binf) = norms(b);
    let (c1, _) = norms(c);
    (a1 + binf).min(ainf + b1) + c1
}

/// Enough primes that their product exceeds twice the coefficient bound.
fn primes_for(bound_bits: f64) -> Vec<Field> {
    // Each prime exceeds 2^61.
    fields(((bound_bits + 3.0) / 61.0).ceil().max(1.0) as usize)
}

fn transform_size(len: usize) -> usize {
    let size = len.next_power_of_two().max(2);
    assert!(size as u64 <= 1u64 << TWO_ADICITY, "transform too large");
    size
}

/// Dense residues of `p` at its packed positions, in Montgomery form.
fn pack(field: &Field, frame: &Frame, g: &Group, p: &LaurentPoly, out: &mut [u64]) {
    out.fill(0);
    for t in p.terms() {
        out[frame.index(g, t)] = field.reduce(&t.coeff);
    }
}

/// `out[k] = sum_{i,j} f[i] * g[j] * table[i][j][k]` for `k < outputs`.
///
/// Missing rows, columns or entries of `table` count as zero. When `f` and `g`
/// are the same slice elementwise (a square), each operand is transformed
/// once.
pub(crate) fn bilinear(
    f: &[&LaurentPoly],
    g: &[&LaurentPoly],
    table: &[Vec<Vec<LaurentPoly>>],
    outputs: usize,
) -> Vec<LaurentPoly> {
    // (i, j, k, constant index)
    let mut consts: Vec<&LaurentPoly> = Vec::new();
    let mut triples: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (i, fi) in f.iter().enumerate() {
        for (j, gj) in g.iter().enumerate() {
            if fi.is_zero() || gj.is_zero() {
                continue;
            }
            let Some(row) = table.get(i).and_then(|r| r.get(j)) else {
                continue;
            };
            for (k, c) in row.iter().enumerate().take(outputs) {
                if c.is_zero() {
                    continue;
                }
                let ci = match consts.iter().position(|x| *x == c) {
                    Some(ci) => ci,
                    None => {
                        consts.push(c);
                        consts.len() - 1
                    }
                };
                triples.push((i, j, k, ci));
            }
        }
    }
    if triples.is_empty() {
        return vec![LaurentPoly::zero(); outputs];
    }

    let used_f: Vec<usize> = (0..f.len()).filter(|&i| triples.iter().any(|t| t.0 == i)).collect();
    let used_g: Vec<usize> = (0..g.len()).filter(|&j| triples.iter().any(|t| t.1 == j)).collect();
    let square = f.len() == g.len() && f.iter().zip(g).all(|(a, b)| std::ptr::eq(*a, *b));

    let (gf, sf, qf) = Group::of(used_f.iter().map(|&i| f[i])).unwrap();
    let (gg, sg, qg) = Group::of(used_g.iter().map(|&j| g[j])).unwrap();
    let (gc, sc, qc) = Group::of(consts.iter().copied()).unwrap();
    let mut frame = Frame::new(&[(sf, qf), (sg, qg), (sc, qc)]);
    frame.width = frame.cols(&gf) + frame.cols(&gg) + frame.cols(&gc) - 2;
    let len = frame.extent(&gf) + frame.extent(&gg) + frame.extent(&gc) - 2;
    let size = transform_size(len);

    let mut bound_bits = 0f64;
    for k in 0..outputs {
        let parts: Vec<f64> = triples
            .iter()
            .filter(|t| t.2 == k)
            .map(|&(i, j, _, ci)| product_bits(f[i], g[j], consts[ci]))
            .collect();
        if !parts.is_empty() {
            bound_bits = bound_bits.max(log2_sum(&parts));
        }
    }
    let primes = primes_for(bound_bits);

    let residues: Vec<Vec<Vec<u64>>> = primes
        .iter()
        .map(|field| {
            let tw = Twiddles::new(field, size, false);
            let itw = Twiddles::new(field, size, true);
            let transform = |group: &Group, p: &LaurentPoly| -> Vec<u64> {
                let mut a = vec![0u64; size];
                pack(field, &frame, group, p, &mut a);
                forward(&mut a, field, &tw);
                a
            };
            let fhat: Vec<Option<Vec<u64>>> = (0..f.len())
                .map(|i| used_f.contains(&i).then(|| transform(&gf, f[i])))
                .collect();
            let ghat: Vec<Option<Vec<u64>>> = if square {
                Vec::new()
            } else {
                (0..g.len())
                    .map(|j| used_g.contains(&j).then(|| transform(&gg, g[j])))
                    .collect()
            };
            // Folding 1/size into the constants, as a plain value, makes the
            // inverse transform land on plain residues.
            let scale = field.redc(field.inv(field.to_mont(size as u64)) as u128);
            let chat: Vec<Vec<u64>> = consts
                .iter()
                .map(|c| {
                    let mut a = transform(&gc, c);
                    a.iter_mut().for_each(|x| *x = field.mul(*x, scale));
                    a
                })
                .collect();

            (0..outputs)
                .map(|k| {
                    let mut acc = vec![0u64; size];
                    let mut any = false;
                    for &(i, j, _, ci) in triples.iter().filter(|t| t.2 == k) {
                        any = true;
                        let a = fhat[i].as_ref().unwrap();
                        let b = if square { fhat[j].as_ref() } else { ghat[j].as_ref() }.unwrap();
                        let c = &chat[ci];
                        for x in 0..size {
                            acc[x] = field.add(acc[x], field.mul(field.mul(a[x], b[x]), c[x]));
                        }
                    }
                    if any {
                        inverse(&mut acc, field, &itw);
                    }
                    acc.truncate(len);
                    acc
                })
                .collect()
        })
        .collect();

    let crt = Crt::new(&primes);
    let (s0, q0) = (gf.s0 + gg.s0 + gc.s0, gf.q0 + gg.q0 + gc.q0);
    (0..outputs)
        .map(|k| {
            let mut terms = Vec::new();
            let mut digits = vec![0u64; primes.len()];
            for idx in (0..len).rev() {
                for (d, r) in digits.iter_mut().zip(&residues) {
                    *d = r[k][idx];
                }
                if let Some(c) = crt.combine(&digits) {
                    terms.push(frame.monomial(idx, s0, q0, c));
                }
            }
            LaurentPoly::from_canonical(terms)
        })
        .collect()
}

/// Upper limit, in bytes, on the transformed short operands plus the
/// accumulators of [`linear_small`].
const BLOCK_MEMORY: usize = 768 << 20;

/// Picks the transform length for overlap-add: long enough to amortize the
/// short operand, short enough to avoid padding the long one.
fn block_size(long: usize, short: usize, transforms_per_block: usize, pairs: usize, primes: usize) -> usize {
    let cost = |n: usize| {
        let blocks = long.div_ceil(n - short + 1) as f64;
        let work = n as f64 * n.trailing_zeros() as f64;
        blocks * (transforms_per_block as f64 * work + pairs as f64 * n as f64) + pairs as f64 * work
    };
    let full = transform_size(long + short - 1);
    let (mut best, mut best_cost) = (full, cost(full));
    let mut n = (2 * short).next_power_of_two().max(2);
    while n < full && primes * (pairs + transforms_per_block) * n * 8 <= BLOCK_MEMORY {
        if cost(n) < best_cost {
            (best, best_cost) = (n, cost(n));
        }
        n *= 2;
    }
    best
}

/// `out[k] = sum_i long[i] * short[i][k]` for `k < outputs`.
///
/// Meant for long operands times short ones: the long operands are cut into
/// blocks that are convolved at a moderate length and overlap-added, so each
/// short operand is transformed once per prime at that length, and the
/// output is reconstructed block by block instead of held as residues in
/// full.
pub(crate) fn linear_small(long: &[&LaurentPoly], short: &[Vec<LaurentPoly>], outputs: usize) -> Vec<LaurentPoly> {
    let pairs: Vec<(usize, usize)> = (0..long.len())
        .flat_map(|i| (0..outputs).map(move |k| (i, k)))
        .filter(|&(i, k)| !long[i].is_zero() && short.get(i).and_then(|r| r.get(k)).is_some_and(|c| !c.is_zero()))
        .collect();
    if pairs.is_empty() {
        return vec![LaurentPoly::zero(); outputs];
    }
    let used_l: Vec<usize> = (0..long.len()).filter(|&i| pairs.iter().any(|p| p.0 == i)).collect();
    let used_k: Vec<usize> = (0..outputs).filter(|&k| pairs.iter().any(|p| p.1 == k)).collect();
    let slot_l = |i: usize| used_l.iter().position(|&x| x == i).unwrap();

    let (gl, sl, ql) = Group::of(used_l.iter().map(|&i| long[i])).unwrap();
    let (gs, ss, qs) = Group::of(pairs.iter().map(|&(i, k)| &short[i][k])).unwrap();
    let mut frame = Frame::new(&[(sl, ql), (ss, qs)]);
    frame.width = frame.cols(&gl) + frame.cols(&gs) - 1;
    let (long_len, short_len) = (frame.extent(&gl), frame.extent(&gs));
    let len = long_len + short_len - 1;

    let mut bound_bits = 0f64;
    for &k in &used_k {
        let one = LaurentPoly::one();
        let parts: Vec<f64> = pairs
            .iter()
            .filter(|p| p.1 == k)
            .map(|&(i, _)| product_bits(long[i], &short[i][k], &one))
            .collect();
        bound_bits = bound_bits.max(log2_sum(&parts));
    }
    let primes = primes_for(bound_bits);
    let n = block_size(long_len, short_len, used_l.len() + used_k.len(), pairs.len(), primes.len());
    let step = n - short_len + 1;

    struct PrimeData {
        field: Field,
        tw: Twiddles,
        itw: Twiddles,
        /// Per pair, the short operand's transform scaled by `1/n`.
        short_hat: Vec<Vec<u64>>,
    }
    let data: Vec<PrimeData> = primes
        .iter()
        .map(|field| {
            let tw = Twiddles::new(field, n, false);
            let itw = Twiddles::new(field, n, true);
            let scale = field.redc(field.inv(field.to_mont(n as u64)) as u128);
            let short_hat = pairs
                .iter()
                .map(|&(i, k)| {
                    let mut a = vec![0u64; n];
                    pack(field, &frame, &gs, &short[i][k], &mut a);
                    forward(&mut a, field, &tw);
                    a.iter_mut().for_each(|x| *x = field.mul(*x, scale));
                    a
                })
                .collect();
            PrimeData {
                field: *field,
                tw,
                itw,
                short_hat,
            }
        })
        .collect();

    // Ascending packed index is the reverse of canonical order.
    let packed: Vec<Vec<(usize, &BigInt)>> = used_l
        .iter()
        .map(|&i| long[i].terms().iter().rev().map(|t| (frame.index(&gl, t), &t.coeff)).collect())
        .collect();
    let mut cursor = vec![0usize; used_l.len()];
    let mut long_hat = vec![vec![0u64; n]; used_l.len()];
    let mut tmp = vec![0u64; n];
    let mut acc = vec![vec![vec![0u64; n]; primes.len()]; used_k.len()];
    let mut terms: Vec<Vec<Monomial>> = vec![Vec::new(); used_k.len()];
    let crt = Crt::new(&primes);
    let mut digits = vec![0u64; primes.len()];
    let (s0, q0) = (gl.s0 + gs.s0, gl.q0 + gs.q0);

    let mut start = 0;
    while start < long_len {
        let end = (start + step).min(long_len);
        let ranges: Vec<(usize, usize)> = packed
            .iter()
            .zip(&mut cursor)
            .map(|(p, c)| {
                let lo = *c;
                *c = lo + p[lo..].partition_point(|&(idx, _)| idx < end);
                (lo, *c)
            })
            .collect();
        for (pr, d) in data.iter().enumerate() {
            let field = &d.field;
            for (slot, buf) in long_hat.iter_mut().enumerate() {
                buf.fill(0);
                let (lo, hi) = ranges[slot];
                for &(idx, c) in &packed[slot][lo..hi] {
                    buf[idx - start] = field.reduce(c);
                }
                forward(buf, field, &d.tw);
            }
            for (ko, &k) in used_k.iter().enumerate() {
                let mut first = true;
                for (pi, &(i, _)) in pairs.iter().enumerate().filter(|(_, p)| p.1 == k) {
                    let (a, b) = (&long_hat[slot_l(i)], &d.short_hat[pi]);
                    if first {
                        for x in 0..n {
                            tmp[x] = field.mul(a[x], b[x]);
                        }
                        first = false;
                    } else {
                        for x in 0..n {
                            tmp[x] = field.add(tmp[x], field.mul(a[x], b[x]));
                        }
                    }
                }
                inverse(&mut tmp, field, &d.itw);
                for (a, t) in acc[ko][pr].iter_mut().zip(&tmp) {
                    *a = field.add(*a, *t);
                }
            }
        }
        // Positions below the next block's start are final.
        let done = if end == long_len { len - start } else { step };
        for (ko, out) in terms.iter_mut().enumerate() {
            for x in 0..done {
                for (dg, r) in digits.iter_mut().zip(&acc[ko]) {
                    *dg = r[x];
                }
                if let Some(c) = crt.combine(&digits) {
                    out.push(frame.monomial(start + x, s0, q0, c));
                }
            }
            for r in acc[ko].iter_mut() {
                r.copy_within(step.., 0);
                r[n - step..].fill(0);
            }
        }
        start = end;
    }

    let mut out = vec![LaurentPoly::zero(); outputs];
    for (ko, mut t) in terms.into_iter().enumerate() {
        t.reverse();
        out[used_k[ko]] = LaurentPoly::from_canonical(t);
    }
    out
}

/// Inputs of [`power_combination`].
pub(crate) struct PowerCombination<'a> {
    pub bases: Vec<&'a LaurentPoly>,
    pub exponent: u32,
    /// `multipliers[j][k]` multiplies `bases[j]^exponent` in output `k`.
    pub multipliers: Vec<Vec<LaurentPoly>>,
    pub divisor: &'a LaurentPoly,
    /// `log2` of a bound on the absolute values of the output coefficients.
    pub bound_bits: f64,
}

/// `out[k] = (sum_j multipliers[j][k] * bases[j]^exponent) / divisor`, for
/// quotients the caller knows to be exact.
///
/// Each operand is transformed once per prime and everything else is
/// pointwise: the powers, the products and the division. Dividing pointwise
/// is sound because the packed quotient is the unique solution modulo
/// `x^N + 1` once the divisor has no zero at the evaluation points. The
/// negacyclic twist (odd powers of a `2N`-th root) keeps those points away
/// from roots of unity of small order, where divisors like `1 - q^-2`
/// vanish. Returns `None` if the divisor vanishes at a point anyway.
pub(crate) fn power_combination(pc: &PowerCombination) -> Option<Vec<LaurentPoly>> {
    if pc.exponent == 0 && pc.bases.iter().any(|b| !b.is_one()) {
        // b^0 = 1, zero included.
        let one = LaurentPoly::one();
        return power_combination(&PowerCombination {
            bases: vec![&one; pc.bases.len()],
            exponent: 0,
            multipliers: pc.multipliers.clone(),
            divisor: pc.divisor,
            bound_bits: pc.bound_bits,
        });
    }
    let outputs = pc.multipliers.iter().map(Vec::len).max().unwrap_or(0);
    let used: Vec<usize> = (0..pc.bases.len())
        .filter(|&j| !pc.bases[j].is_zero() && pc.multipliers.get(j).is_some_and(|m| m.iter().any(|c| !c.is_zero())))
        .collect();
    if pc.divisor.is_zero() {
        return None;
    }
    if used.is_empty() {
        return Some(vec![LaurentPoly::zero(); outputs]);
    }
    let (gb, sb, qb) = Group::of(used.iter().map(|&j| pc.bases[j]))?;
    let (gk, sk, qk) = Group::of(used.iter().flat_map(|&j| pc.multipliers[j].iter()))?;
    let (gd, sd, qd) = Group::of(std::iter::once(pc.divisor))?;
    let mut frame = Frame::new(&[(sb, qb), (sk, qk), (sd, qd)]);
    let e = pc.exponent as usize;
    let rows = e * (frame.rows(&gb) - 1) + frame.rows(&gk);
    frame.width = e * (frame.cols(&gb) - 1) + frame.cols(&gk);
    let len = rows * frame.width;
    let size = transform_size(len);
    if 2 * size as u64 > 1u64 << TWO_ADICITY {
        return None;
    }
    let primes = primes_for(pc.bound_bits);

    let mut residues: Vec<Vec<Vec<u64>>> = Vec::with_capacity(primes.len());
    for field in &primes {
        let zeta = field.pow(field.root, (1u64 << TWO_ADICITY) / (2 * size as u64));
        let tw = Twiddles::new(field, size, false);
        let itw = Twiddles::new(field, size, true);
        let transform = |g: &Group, p: &LaurentPoly| -> Vec<u64> {
            let mut a = vec![0u64; size];
            for t in p.terms() {
                let idx = frame.index(g, t);
                a[idx] = field.mul(field.reduce(&t.coeff), field.pow(zeta, idx as u64));
            }
            forward(&mut a, field, &tw);
            a
        };

        // Batch inversion of the divisor's transform.
        let mut inv = transform(&gd, pc.divisor);
        let mut prefix = Vec::with_capacity(size);
        let mut acc = field.one();
        for &x in &inv {
            if x == 0 {
                return None;
            }
            prefix.push(acc);
            acc = field.mul(acc, x);
        }
        let mut back = field.inv(acc);
        for i in (0..size).rev() {
            let x = inv[i];
            inv[i] = field.mul(back, prefix[i]);
            back = field.mul(back, x);
        }
        drop(prefix);

        let powers: Vec<Vec<u64>> = used
            .iter()
            .map(|&j| {
                let mut a = transform(&gb, pc.bases[j]);
                a.iter_mut().for_each(|x| *x = field.pow(*x, e as u64));
                a
            })
            .collect();

        // Undo the twist and the transform length: multiply position `i` by
        // `zeta^-i / N`, kept in plain form so the result is plain.
        let zeta_inv = field.inv(zeta);
        let scale = field.redc(field.inv(field.to_mont(size as u64)) as u128);
        let mut per_output = Vec::with_capacity(outputs);
        for k in 0..outputs {
            let mut acc = vec![0u64; size];
            for (slot, &j) in used.iter().enumerate() {
                let Some(m) = pc.multipliers[j].get(k).filter(|m| !m.is_zero()) else {
                    continue;
                };
                let mhat = transform(&gk, m);
                for ((a, &p), &c) in acc.iter_mut().zip(&powers[slot]).zip(&mhat) {
                    *a = field.add(*a, field.mul(p, c));
                }
            }
            for (a, &d) in acc.iter_mut().zip(&inv) {
                *a = field.mul(*a, d);
            }
            inverse(&mut acc, field, &itw);
            acc.truncate(len);
            let mut w = scale;
            for a in acc.iter_mut() {
                *a = field.mul(*a, w);
                w = field.mul(w, zeta_inv);
            }
            per_output.push(acc);
        }
        residues.push(per_output);
    }

    let crt = Crt::new(&primes);
    let s0 = e as i32 * gb.s0 + gk.s0 - gd.s0;
    let q0 = e as i32 * gb.q0 + gk.q0 - gd.q0;
    let mut digits = vec![0u64; primes.len()];
    let out = (0..outputs)
        .map(|k| {
            let mut terms = Vec::new();
            for idx in (0..len).rev() {
                for (d, r) in digits.iter_mut().zip(&residues) {
                    *d = r[k][idx];
                }
                if let Some(c) = crt.combine(&digits) {
                    terms.push(frame.monomial(idx, s0, q0, c));
                }
            }
            LaurentPoly::from_canonical(terms)
        })
        .collect();
    Some(out)
}

/// Reconstruction into the symmetric range by explicit CRT: with `M_i = M /
/// p_i` and `y_i = r_i (M_i^-1 mod p_i)`, the value is `sum y_i M_i - t M`
/// where `t` is the nearest integer to `sum y_i / p_i`. Callers guarantee
/// `|value| < M / 8`, so the floating-point estimate of `t` is never
/// ambiguous.
struct Crt {
    fields: Vec<Field>,
    /// Montgomery form of `M_i^-1 mod p_i`.
    cofactor_inv: Vec<u64>,
    /// Little-endian limbs of each `M_i`, `k` limbs each.
    cofactors: Vec<Vec<u64>>,
    modulus: Vec<u64>,
    recip: Vec<f64>,
}

impl Crt {
    fn new(fields: &[Field]) -> Crt {
        let k = fields.len();
        let modulus = fields.iter().fold(BigUint::from(1u32), |m, f| m * f.p);
        let limbs = |v: &BigUint| {
            let mut l: Vec<u64> = v.iter_u64_digits().collect();
            l.resize(k, 0);
            l
        };
        let cofactors: Vec<BigUint> = fields.iter().map(|f| &modulus / f.p).collect();
        let cofactor_inv = fields
            .iter()
            .zip(&cofactors)
            .map(|(f, m)| {
                let r = (m % f.p).iter_u64_digits().next().unwrap_or(0);
                f.inv(f.to_mont(r))
            })
            .collect();
        Crt {
            fields: fields.to_vec(),
            cofactor_inv,
            cofactors: cofactors.iter().map(limbs).collect(),
            modulus: limbs(&modulus),
            recip: fields.iter().map(|f| 1.0 / f.p as f64).collect(),
        }
    }

    /// The integer with the given plain residues, `None` when it is zero.
    fn combine(&self, residues: &[u64]) -> Option<BigInt> {
        if residues.iter().all(|&r| r == 0) {
            return None;
        }
        let k = self.fields.len();
        let mut acc = vec![0u64; 2 * (k + 1)];
        let (acc, tm) = acc.split_at_mut(k + 1);
        let mut estimate = 0f64;
        #[allow(clippy::needless_range_loop)]
        for i in 0..k {
            let f = &self.fields[i];
            // plain * Montgomery -> plain
            let y = f.mul(residues[i], self.cofactor_inv[i]);
            estimate += y as f64 * self.recip[i];
            let mut carry = 0u128;
            for (a, &m) in acc.iter_mut().zip(&self.cofactors[i]) {
                let x = *a as u128 + y as u128 * m as u128 + carry;
                *a = x as u64;
                carry = x >> 64;
            }
            acc[k] += carry as u64;
        }
        let t = estimate.round() as u64;
        let mut carry = 0u128;
        for (x, &m) in tm.iter_mut().zip(&self.modulus) {
            let v = t as u128 * m as u128 + carry;
            *x = v as u64;
            carry = v >> 64;
        }
        tm[k] = carry as u64;
        let negative = acc.iter().rev().cmp(tm.iter().rev()) == std::cmp::Ordering::Less;
        let (hi, lo): (&[u64], &[u64]) = if negative { (tm, acc) } else { (acc, tm) };
        let mut diff = [0u64; 128];
        let mut diff_vec;
        let diff: &mut [u64] = if k < diff.len() {
            &mut diff[..k + 1]
        } else {
            diff_vec = vec![0u64; k + 1];
            &mut diff_vec
        };
        let mut borrow = false;
        for ((d, &a), &b) in diff.iter_mut().zip(hi).zip(lo) {
            let (x, b1) = a.overflowing_sub(b);
            let (x, b2) = x.overflowing_sub(borrow as u64);
            *d = x;
            borrow = b1 || b2;
        }
        let digits: Vec<u32> = diff.iter().flat_map(|&l| [l as u32, (l >> 32) as u32]).collect();
        let sign = if negative { Sign::Minus } else { Sign::Plus };
        let c = BigInt::new(sign, digits);
        (!c.is_zero()).then_some(c)
    }
}
