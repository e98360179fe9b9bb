//! Recovering basis coordinates from partial traces.
//!
//! The right trace, top trace and twisted right trace of `f = x ll + y cc +
//! z xx` are linear in `(x, y, z)`; the matrix of that map is
//!
//! ```text
//!     [ 0  1  A ]        A = <a><a+1>/q
//! M = [ 1  0  1 ]        B = q<a><a+1>
//!     [ B  1  0 ]
//! ```
//!
//! with `det M = <a><a+1>(q + 1/q)`. Inversion is Cramer's rule followed by
//! exact division, so every intermediate stays a Laurent polynomial.

use crate::basis::EndoVec;
use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceTriple {
    pub tr_r: LaurentPoly,
    pub tr_t: LaurentPoly,
    pub tr_twisted_r: LaurentPoly,
}

impl TraceTriple {
    pub fn new(tr_r: LaurentPoly, tr_t: LaurentPoly, tr_twisted_r: LaurentPoly) -> Self {
        TraceTriple { tr_r, tr_t, tr_twisted_r }
    }

    fn as_array(&self) -> [&LaurentPoly; 3] {
        [&self.tr_r, &self.tr_t, &self.tr_twisted_r]
    }
}

impl std::ops::Add for &TraceTriple {
    type Output = TraceTriple;
    fn add(self, o: &TraceTriple) -> TraceTriple {
        TraceTriple::new(&self.tr_r + &o.tr_r, &self.tr_t + &o.tr_t, &self.tr_twisted_r + &o.tr_twisted_r)
    }
}

pub type SystemMatrix = [[LaurentPoly; 3]; 3];

/// Solves the trace system for a fixed set of constants; caches `M` and its
/// determinant.
#[derive(Clone, Debug)]
pub struct Extractor {
    m: SystemMatrix,
    det: LaurentPoly,
}

fn det3(m: &[[&LaurentPoly; 3]; 3]) -> LaurentPoly {
    let minor = |a: usize, b: usize, c: usize, d: usize| {
        let (r1, r2) = (1, 2);
        &(m[r1][a] * m[r2][b]) - &(m[r1][c] * m[r2][d])
    };
    let t0 = m[0][0] * &minor(1, 2, 2, 1);
    let t1 = m[0][1] * &minor(0, 2, 2, 0);
    let t2 = m[0][2] * &minor(0, 1, 1, 0);
    &(&t0 - &t1) + &t2
}

fn refs(m: &SystemMatrix) -> [[&LaurentPoly; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| &m[i][j]))
}

const COORD_NAMES: [&str; 3] = ["ll", "cc", "xx"];

impl Extractor {
    pub fn new(constants: &Constants) -> Self {
        let m = system_matrix(constants);
        let det = det3(&refs(&m));
        Extractor { m, det }
    }

    pub fn builtin() -> &'static Extractor {
        static CELL: std::sync::OnceLock<Extractor> = std::sync::OnceLock::new();
        CELL.get_or_init(|| Extractor::new(Constants::builtin()))
    }

    pub fn matrix(&self) -> &SystemMatrix {
        &self.m
    }

    pub fn determinant(&self) -> &LaurentPoly {
        &self.det
    }

    /// `M v`.
    pub fn forward_traces(&self, v: &EndoVec) -> TraceTriple {
        let c = v.coords();
        let row = |r: &[LaurentPoly; 3]| -> LaurentPoly {
            r.iter()
                .zip(c)
                .filter(|(a, x)| !a.is_zero() && !x.is_zero())
                .map(|(a, x)| a * x)
                .sum()
        };
        TraceTriple::new(row(&self.m[0]), row(&self.m[1]), row(&self.m[2]))
    }

    /// The unique `v` with `M v = t`, or `InconsistentTraces` if `v` would
    /// leave the Laurent ring.
    pub fn extract(&self, t: &TraceTriple) -> Result<EndoVec> {
        let rhs = t.as_array();
        let mut out: [LaurentPoly; 3] = Default::default();
        for (col, slot) in out.iter_mut().enumerate() {
            let mut m = refs(&self.m);
            for row in 0..3 {
                m[row][col] = rhs[row];
            }
            let numerator = det3(&m);
            *slot = numerator.exact_div(&self.det).map_err(|e| match e {
                Error::NotDivisible => Error::InconsistentTraces {
                    coordinate: COORD_NAMES[col],
                },
                other => other,
            })?;
        }
        Ok(EndoVec::from_coords(out))
    }
}

/// The trace table, rows (tr_R, tr_T, twisted tr_R), columns (ll, cc, xx).
pub fn system_matrix(constants: &Constants) -> SystemMatrix {
    constants.trace_table().clone()
}

pub fn extract(t: &TraceTriple) -> Result<EndoVec> {
    Extractor::builtin().extract(t)
}

pub fn forward_traces(v: &EndoVec) -> TraceTriple {
    Extractor::builtin().forward_traces(v)
}
