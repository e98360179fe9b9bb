//! The transcribed constants: basis matrices, product table, trace table,
//! the clasped cabling tangles `TT+`/`TT-`, the closure row `AS*`, their
//! leading-term truncations and the reference expansion of `LG(AS(1))`.
//!
//! Everything lives in one JSON file (`data/constants.json`). The file
//! declares a SHA-256 checksum of its `constants` object (compact, keys
//! sorted); loading fails if the contents do not hash to it.

use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::basis::{BasisAlgebra, EndoVec, RowVector};
use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;
use crate::matrix::EndoMatrix;

pub const FORMAT: &str = "links-gould-constants";
pub const VERSION: u32 = 1;

const BUILTIN: &str = include_str!("../data/constants.json");

#[derive(Deserialize)]
struct Entry<T> {
    #[allow(dead_code)]
    source: String,
    value: T,
}

#[derive(Deserialize)]
struct MatrixEntry {
    input: [usize; 2],
    output: [usize; 2],
    value: LaurentPoly,
}

#[derive(Deserialize)]
struct Truncation {
    t: EndoVec,
    s: [LaurentPoly; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Payload {
    bracket_alpha: Entry<LaurentPoly>,
    bracket_alpha_plus_one: Entry<LaurentPoly>,
    product_table: Entry<[[EndoVec; 3]; 3]>,
    trace_table: Entry<[[LaurentPoly; 3]; 3]>,
    tt_plus: Entry<EndoVec>,
    tt_minus: Entry<EndoVec>,
    as_star: Entry<[LaurentPoly; 3]>,
    ll_matrix: Entry<Vec<MatrixEntry>>,
    cc_matrix: Entry<Vec<MatrixEntry>>,
    xx_matrix: Entry<Vec<MatrixEntry>>,
    leading_truncation: Entry<Truncation>,
    lg_as_1: Entry<LaurentPoly>,
}

/// `<a> = s - s^-1`, `<a+1> = q s - q^-1 s^-1` and the two products that
/// appear in the trace table: `a_over_q = <a><a+1>/q`, `q_times = q<a><a+1>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketConstants {
    pub bra_alpha: LaurentPoly,
    pub bra_alpha_plus_1: LaurentPoly,
    pub a_over_q: LaurentPoly,
    pub q_times: LaurentPoly,
}

impl BracketConstants {
    pub fn from_brackets(bra_alpha: LaurentPoly, bra_alpha_plus_1: LaurentPoly) -> Self {
        let prod = &bra_alpha * &bra_alpha_plus_1;
        BracketConstants {
            a_over_q: prod.shift(-1, 0),
            q_times: prod.shift(1, 0),
            bra_alpha,
            bra_alpha_plus_1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Constants {
    checksum: String,
    brackets: BracketConstants,
    algebra: BasisAlgebra,
    trace_table: [[LaurentPoly; 3]; 3],
    tt_plus: EndoVec,
    tt_minus: EndoVec,
    as_star: RowVector,
    ll_matrix: EndoMatrix,
    cc_matrix: EndoMatrix,
    xx_matrix: EndoMatrix,
    truncation_t: EndoVec,
    truncation_s: RowVector,
    lg_as_1: LaurentPoly,
}

/// SHA-256 of the compact, key-sorted serialization of `constants`.
pub fn payload_checksum(constants: &Value) -> String {
    let bytes = serde_json::to_vec(constants).expect("json value serializes");
    format!("sha256:{}", hex::encode(Sha256::digest(&bytes)))
}

fn matrix(entries: Vec<MatrixEntry>) -> Result<EndoMatrix> {
    let mut m = EndoMatrix::zero();
    for e in entries {
        if e.input.iter().chain(&e.output).any(|&i| i > 3) {
            return Err(Error::Constants(format!("matrix index out of range: {:?} -> {:?}", e.input, e.output)));
        }
        let (i, o) = (4 * e.input[0] + e.input[1], 4 * e.output[0] + e.output[1]);
        m.set(i, o, e.value);
    }
    Ok(m)
}

impl Constants {
    /// The constants shipped with the crate, parsed once.
    pub fn builtin() -> &'static Constants {
        static CELL: OnceLock<Constants> = OnceLock::new();
        CELL.get_or_init(|| Constants::from_json_str(BUILTIN).expect("bundled constants file is valid"))
    }

    pub fn builtin_source() -> &'static str {
        BUILTIN
    }

    pub fn load(path: &Path) -> Result<Constants> {
        Constants::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_json_str(text: &str) -> Result<Constants> {
        let doc: Value = serde_json::from_str(text)?;
        let field = |name: &str| doc.get(name).ok_or_else(|| Error::Constants(format!("missing field {name:?}")));
        if field("format")?.as_str() != Some(FORMAT) {
            return Err(Error::Constants(format!("format is not {FORMAT:?}")));
        }
        if field("version")?.as_u64() != Some(VERSION as u64) {
            return Err(Error::Constants(format!("unsupported version, expected {VERSION}")));
        }
        if field("basis")? != &serde_json::json!(["ll", "cc", "xx"]) {
            return Err(Error::Constants("basis order must be [ll, cc, xx]".into()));
        }
        let declared = field("checksum")?
            .as_str()
            .ok_or_else(|| Error::Constants("checksum is not a string".into()))?
            .to_string();
        let payload = field("constants")?;
        let computed = payload_checksum(payload);
        if declared != computed {
            return Err(Error::ChecksumMismatch { declared, computed });
        }
        let p: Payload = serde_json::from_value(payload.clone())?;

        let brackets = BracketConstants::from_brackets(p.bracket_alpha.value, p.bracket_alpha_plus_one.value);
        Ok(Constants {
            checksum: computed,
            brackets,
            algebra: BasisAlgebra::new(p.product_table.value),
            trace_table: p.trace_table.value,
            tt_plus: p.tt_plus.value,
            tt_minus: p.tt_minus.value,
            as_star: RowVector(p.as_star.value),
            ll_matrix: matrix(p.ll_matrix.value)?,
            cc_matrix: matrix(p.cc_matrix.value)?,
            xx_matrix: matrix(p.xx_matrix.value)?,
            truncation_t: p.leading_truncation.value.t,
            truncation_s: RowVector(p.leading_truncation.value.s),
            lg_as_1: p.lg_as_1.value,
        })
    }

    /// `sha256:<hex>` of the constants payload.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn brackets(&self) -> &BracketConstants {
        &self.brackets
    }

    pub fn algebra(&self) -> &BasisAlgebra {
        &self.algebra
    }

    /// Rows (right, top, twisted right), columns (ll, cc, xx).
    pub fn trace_table(&self) -> &[[LaurentPoly; 3]; 3] {
        &self.trace_table
    }

    pub fn tt_plus(&self) -> &EndoVec {
        &self.tt_plus
    }

    pub fn tt_minus(&self) -> &EndoVec {
        &self.tt_minus
    }

    pub fn as_star(&self) -> &RowVector {
        &self.as_star
    }

    pub fn ll_matrix(&self) -> &EndoMatrix {
        &self.ll_matrix
    }

    pub fn cc_matrix(&self) -> &EndoMatrix {
        &self.cc_matrix
    }

    pub fn xx_matrix(&self) -> &EndoMatrix {
        &self.xx_matrix
    }

    /// Leading-term truncations `T ~ TT+ ⊠ TT-` and `S ~ AS*`.
    pub fn leading_truncations(&self) -> (&EndoVec, &RowVector) {
        (&self.truncation_t, &self.truncation_s)
    }

    /// Reference expansion of `LG(AS(1))`, for bit-exact comparison.
    pub fn lg_as_1_reference(&self) -> &LaurentPoly {
        &self.lg_as_1
    }
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;

    use super::*;
    use crate::basis::Basis;

    fn p(s: &str) -> LaurentPoly {
        s.parse().unwrap()
    }

    #[test]
    fn builtin_loads_and_checksums() {
        let c = Constants::builtin();
        assert!(c.checksum().starts_with("sha256:"));
        assert_eq!(c.checksum().len(), 7 + 64);
    }

    #[test]
    fn tampering_is_detected() {
        let tampered = BUILTIN.replacen(r#"["8", 2, 12]"#, r#"["9", 2, 12]"#, 1);
        assert_ne!(tampered, BUILTIN);
        match Constants::from_json_str(&tampered) {
            Err(Error::ChecksumMismatch { declared, computed }) => assert_ne!(declared, computed),
            other => panic!("expected checksum mismatch, got {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_format_header() {
        let bad = BUILTIN.replacen(FORMAT, "something-else", 1);
        assert!(matches!(Constants::from_json_str(&bad), Err(Error::Constants(_))));
    }

    #[test]
    fn bracket_identities() {
        let b = Constants::builtin().brackets();
        assert_eq!(b.bra_alpha, p("s - s^-1"));
        assert_eq!(b.bra_alpha_plus_1, p("q*s - q^-1*s^-1"));
        assert_eq!(b.a_over_q.shift(2, 0), b.q_times);
        assert!(b.a_over_q.is_involution_fixed());
        assert!(b.q_times.is_involution_fixed());
        // The table's ll ⊠ xx entry is the same <a><a+1>/q.
        let alg = Constants::builtin().algebra();
        assert_eq!(alg.product(Basis::Ll, Basis::Xx).ll, b.a_over_q);
    }

    #[test]
    fn trace_table_matches_brackets() {
        let c = Constants::builtin();
        let b = c.brackets();
        let (z, o) = (LaurentPoly::zero(), LaurentPoly::one());
        let expected = [
            [z.clone(), o.clone(), b.a_over_q.clone()],
            [o.clone(), z.clone(), o.clone()],
            [b.q_times.clone(), o, z],
        ];
        assert_eq!(c.trace_table(), &expected);
    }

    #[test]
    fn tangle_vector_spot_terms() {
        let c = Constants::builtin();
        assert_eq!(c.tt_plus().ll.coeff(0, 2), BigInt::from(1));
        assert_eq!(c.tt_minus().cc.coeff(2, 4), BigInt::from(2));
        let sym = p("s^2 + q^-2*s^-2");
        let xx = &(&sym * &p("2*q^-2 - 2*q^-4 + 2*q^-6 - 4*q^-8 + 2*q^-10"))
            + &p("1 - 4*q^-2 + 4*q^-4 - 4*q^-6 + 8*q^-8 - 4*q^-10");
        assert_eq!(c.tt_plus().xx, xx);
        assert!(c.tt_plus().is_involution_fixed());
        assert!(c.tt_minus().is_involution_fixed());
    }

    #[test]
    fn as_star_leading_terms() {
        let row = &Constants::builtin().as_star().0;
        assert_eq!(row[0].terms()[0].sexp, 6);
        assert_eq!(row[0].coeff(0, 6), BigInt::from(1));
        assert_eq!(row[2].coeff(0, 6), BigInt::from(3));
        assert_eq!(row[2].coeff(-2, 6), BigInt::from(1));
        assert!(row.iter().all(LaurentPoly::is_involution_fixed));
    }

    #[test]
    fn truncations() {
        let (t, s) = Constants::builtin().leading_truncations();
        assert_eq!(t.cc, p("4*q^2*s^8"));
        assert_eq!(t.ll, p("4*q^2*s^6"));
        assert_eq!(t.xx, p("8*s^6"));
        assert_eq!(s.0[1], p("s^4"));
    }
}
