//! Explicit 16×16 matrices of the basis tangles on `V ⊗ V*`.
//!
//! Rows and columns are indexed by `4 i + j` for the vector `x_i ⊗ y_j`.
//! Entry `(input, output)` is the coefficient of `output` in the image of
//! `input`. [`compose`] is vertical composition, `compose(a, b) = a ∘ b`
//! (apply `b` first).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::constants::Constants;
use crate::error::Result;
use crate::laurent::LaurentPoly;

pub const DIM: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndoMatrix {
    entries: Vec<LaurentPoly>,
}

impl EndoMatrix {
    pub fn zero() -> Self {
        EndoMatrix {
            entries: vec![LaurentPoly::zero(); DIM * DIM],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..DIM {
            m.set(i, i, LaurentPoly::one());
        }
        m
    }

    /// Index of `x_i ⊗ y_j`.
    pub fn basis_index(i: usize, j: usize) -> usize {
        4 * i + j
    }

    pub fn get(&self, input: usize, output: usize) -> &LaurentPoly {
        &self.entries[input * DIM + output]
    }

    pub fn set(&mut self, input: usize, output: usize, value: LaurentPoly) {
        self.entries[input * DIM + output] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(LaurentPoly::is_zero)
    }

    pub fn scale(&self, c: &LaurentPoly) -> Self {
        EndoMatrix {
            entries: self.entries.iter().map(|e| e * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        EndoMatrix {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    /// Input indices whose image is nonzero.
    pub fn support_inputs(&self) -> Vec<usize> {
        (0..DIM).filter(|&i| (0..DIM).any(|o| !self.get(i, o).is_zero())).collect()
    }

    pub fn evaluate(&self, q: &BigRational, s: &BigRational) -> Result<Vec<BigRational>> {
        self.entries.iter().map(|e| e.substitute(q, s)).collect()
    }
}

/// `a ∘ b`: the image of `x` under `b`, then under `a`.
pub fn compose(a: &EndoMatrix, b: &EndoMatrix) -> EndoMatrix {
    let mut out = EndoMatrix::zero();
    for input in 0..DIM {
        for mid in 0..DIM {
            let bm = b.get(input, mid);
            if bm.is_zero() {
                continue;
            }
            for output in 0..DIM {
                let am = a.get(mid, output);
                if am.is_zero() {
                    continue;
                }
                let e = out.get(input, output) + &(bm * am);
                out.set(input, output, e);
            }
        }
    }
    out
}

/// Rank of a list of rows over the rationals (Gaussian elimination).
pub fn rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pivot);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = &row[c] / &pivot_row[c];
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x -= &factor * y;
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Rank of the matrices, flattened to 256-vectors, at a rational point.
pub fn rank_at(matrices: &[&EndoMatrix], q: &BigRational, s: &BigRational) -> Result<usize> {
    let rows = matrices.iter().map(|m| m.evaluate(q, s)).collect::<Result<Vec<_>>>()?;
    Ok(rank(rows))
}

/// Sample points for the independence check.
pub fn sample_points() -> [(BigRational, BigRational); 2] {
    let r = |n: i64| BigRational::from_integer(BigInt::from(n));
    [(r(2), r(3)), (r(3), r(5))]
}

/// The basis matrices `ll`, `cc`, `xx` are linearly independent: rank 3 at
/// both sample points.
pub fn independence_check(c: &Constants) -> Result<bool> {
    independence_of(&[c.ll_matrix(), c.cc_matrix(), c.xx_matrix()])
}

pub fn independence_of(matrices: &[&EndoMatrix]) -> Result<bool> {
    for (q, s) in sample_points() {
        if rank_at(matrices, &q, &s)? != matrices.len() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> LaurentPoly {
        s.parse().unwrap()
    }

    fn consts() -> &'static Constants {
        Constants::builtin()
    }

    #[test]
    fn ll_is_identity() {
        assert_eq!(consts().ll_matrix(), &EndoMatrix::identity());
        assert_eq!(compose(consts().ll_matrix(), consts().xx_matrix()), *consts().xx_matrix());
        assert_eq!(compose(consts().xx_matrix(), consts().ll_matrix()), *consts().xx_matrix());
    }

    #[test]
    fn cc_entries() {
        let cc = consts().cc_matrix();
        let i22 = EndoMatrix::basis_index(2, 2);
        let i00 = EndoMatrix::basis_index(0, 0);
        assert_eq!(cc.get(i22, i00), &p("-q^-2*s^-2"));
        assert_eq!(cc.get(i00, EndoMatrix::basis_index(3, 3)), &p("s^-2"));
        let diag: Vec<usize> = (0..4).map(|i| EndoMatrix::basis_index(i, i)).collect();
        assert_eq!(cc.support_inputs(), diag);
    }

    #[test]
    fn cc_squares_to_zero() {
        let cc = consts().cc_matrix();
        assert!(compose(cc, cc).is_zero());
    }

    #[test]
    fn xx_corner_entries() {
        let xx = consts().xx_matrix();
        let (i03, i30) = (EndoMatrix::basis_index(0, 3), EndoMatrix::basis_index(3, 0));
        assert_eq!(xx.get(i03, i03), &LaurentPoly::one());
        assert_eq!(xx.get(i30, i30), &LaurentPoly::one());
        assert_eq!((0..DIM).filter(|&o| !xx.get(i03, o).is_zero()).count(), 1);
        assert_eq!(xx.get(EndoMatrix::basis_index(1, 2), EndoMatrix::basis_index(1, 2)), &p("q^-2"));
    }

    #[test]
    fn composition_is_associative_on_basis() {
        let c = consts();
        let ms = [c.ll_matrix(), c.cc_matrix(), c.xx_matrix()];
        for a in ms {
            for b in ms {
                for d in ms {
                    assert_eq!(compose(a, &compose(b, d)), compose(&compose(a, b), d));
                }
            }
        }
    }

    #[test]
    fn independence() {
        let c = consts();
        assert!(independence_check(c).unwrap());
        let fake = c.ll_matrix().scale(&p("2")).add(&c.cc_matrix().scale(&p("3")));
        assert!(!independence_of(&[c.ll_matrix(), c.cc_matrix(), &fake]).unwrap());
        let r = |n: i64| BigRational::from_integer(n.into());
        let ms = [c.ll_matrix(), c.cc_matrix(), c.xx_matrix()];
        assert_eq!(rank_at(&ms, &r(3), &r(5)).unwrap(), 3);
    }
}
