//! Reader for the canonical text format. Accepts any sum of products of
//! integers and powers of `q` and `s`; like terms are combined.

use num_bigint::BigInt;
use num_traits::One;

use super::{LaurentPoly, Monomial};
use crate::error::{Error, Result};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn digits(&mut self) -> Result<&'a str> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if start == self.pos {
            return self.error("expected digits");
        }
        Ok(&self.src[start..self.pos])
    }

    fn sign(&mut self) -> Option<bool> {
        match self.peek() {
            Some('+') => {
                self.bump();
                Some(false)
            }
            Some('-') | Some('\u{2212}') => {
                self.bump();
                Some(true)
            }
            _ => None,
        }
    }

    fn exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let paren = self.peek() == Some('(');
        if paren {
            self.bump();
            self.skip_ws();
        }
        let neg = self.sign().unwrap_or(false);
        let d = self.digits()?;
        let mut e: i64 = match d.parse() {
            Ok(v) => v,
            Err(_) => return self.error("exponent out of range"),
        };
        if neg {
            e = -e;
        }
        if paren {
            self.skip_ws();
            if self.bump() != Some(')') {
                return self.error("expected ')'");
            }
        }
        i32::try_from(e).or_else(|_| self.error("exponent out of range"))
    }

    fn factor(&mut self, term: &mut Monomial) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let n: BigInt = self.digits()?.parse().expect("digits parse");
                term.coeff *= n;
            }
            Some(v @ ('q' | 's')) => {
                self.bump();
                self.skip_ws();
                let e = if self.peek() == Some('^') {
                    self.bump();
                    self.exponent()?
                } else {
                    1
                };
                if v == 'q' {
                    term.qexp += e;
                } else {
                    term.sexp += e;
                }
            }
            Some(c) => return self.error(format!("unexpected {c:?}")),
            None => return self.error("unexpected end of input"),
        }
        Ok(())
    }

    fn term(&mut self, negative: bool) -> Result<Monomial> {
        let mut term = Monomial::new(BigInt::one(), 0, 0);
        self.factor(&mut term)?;
        loop {
            self.skip_ws();
            if self.peek() == Some('*') {
                self.bump();
                self.factor(&mut term)?;
            } else {
                break;
            }
        }
        if negative {
            term.coeff = -term.coeff;
        }
        Ok(term)
    }
}

pub(super) fn parse_poly(src: &str) -> Result<LaurentPoly> {
    let mut cur = Cursor { src, pos: 0 };
    let mut terms = Vec::new();
    cur.skip_ws();
    let neg = cur.sign().unwrap_or(false);
    terms.push(cur.term(neg)?);
    loop {
        cur.skip_ws();
        if cur.peek().is_none() {
            break;
        }
        let Some(neg) = cur.sign() else {
            return cur.error("expected '+' or '-'");
        };
        cur.skip_ws();
        terms.push(cur.term(neg)?);
    }
    Ok(LaurentPoly::from_terms(terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_canonical_and_loose_forms() {
        let a = parse_poly("8*q^2*s^12 + 8*s^12 - 8*q^-2*s^12").unwrap();
        let b = parse_poly("  8 * s^12 * q^2 + s^12*8 \u{2212} 8*q^(-2)*s^12 ").unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_poly("-1").unwrap(), LaurentPoly::constant(-1));
        assert_eq!(parse_poly("q*q*s^-1*s").unwrap(), LaurentPoly::monomial(1, 2, 0));
        assert!(parse_poly("0").unwrap().is_zero());
        assert!(parse_poly("q - q").unwrap().is_zero());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "q^", "2 q", "x", "q +", "q^(2", "3**q"] {
            assert!(matches!(parse_poly(bad), Err(Error::Parse { .. })), "{bad:?}");
        }
    }
}
