//! Candidate expressions in the entries of a fundamental matrix `Z`.
//!
//! Grammar: sums, products, quotients and integer powers of numbers, `i`,
//! `det`, entries `z12` or `z(1,2)` (1-based), and parameter derivatives
//! `dz(k,i,j)` of `z_ij` with respect to `t_k`.

use crate::error::{Error, Result};
use crate::{CMatrix, Complex64};

/// Something computable from `Z` and, optionally, `dZ/dt_k`.
pub trait Candidate: Sync {
    fn eval(&self, z: &CMatrix, dz: &[CMatrix]) -> Result<Complex64>;

    /// Whether `dz` must be supplied.
    fn uses_t_derivatives(&self) -> bool {
        false
    }
}

impl<F> Candidate for F
where
    F: Fn(&CMatrix) -> Complex64 + Sync,
{
    fn eval(&self, z: &CMatrix, _: &[CMatrix]) -> Result<Complex64> {
        Ok(self(z))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Complex64),
    Entry(usize, usize),
    Deriv(usize, usize, usize),
    Det,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            s: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

impl Candidate for Expr {
    fn eval(&self, z: &CMatrix, dz: &[CMatrix]) -> Result<Complex64> {
        let get = |m: &CMatrix, i: usize, j: usize| -> Result<Complex64> {
            if i < m.nrows() && j < m.ncols() {
                Ok(m[(i, j)])
            } else {
                Err(Error::InvalidInput(format!("entry ({}, {}) outside the matrix", i + 1, j + 1)))
            }
        };
        Ok(match self {
            Expr::Num(c) => *c,
            Expr::Entry(i, j) => get(z, *i, *j)?,
            Expr::Deriv(k, i, j) => {
                let m = dz
                    .get(*k)
                    .ok_or_else(|| Error::InvalidInput(format!("no parameter t{}", k + 1)))?;
                get(m, *i, *j)?
            }
            Expr::Det => z.determinant(),
            Expr::Neg(a) => -a.eval(z, dz)?,
            Expr::Add(a, b) => a.eval(z, dz)? + b.eval(z, dz)?,
            Expr::Sub(a, b) => a.eval(z, dz)? - b.eval(z, dz)?,
            Expr::Mul(a, b) => a.eval(z, dz)? * b.eval(z, dz)?,
            Expr::Div(a, b) => {
                let d = b.eval(z, dz)?;
                if d.norm() == 0.0 {
                    return Err(Error::EvaluationFailure("division by zero in candidate".into()));
                }
                a.eval(z, dz)? / d
            }
            Expr::Pow(a, k) => a.eval(z, dz)?.powi(*k),
        })
    }

    fn uses_t_derivatives(&self) -> bool {
        match self {
            Expr::Deriv(..) => true,
            Expr::Num(_) | Expr::Entry(..) | Expr::Det => false,
            Expr::Neg(a) | Expr::Pow(a, _) => a.uses_t_derivatives(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses_t_derivatives() || b.uses_t_derivatives()
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::InvalidInput(format!("candidate expression, column {}: {msg}", self.pos + 1))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            if self.eat(b'+') {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat(b'-') {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.factor()?;
        loop {
            if self.eat(b'*') {
                e = Expr::Mul(Box::new(e), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                e = Expr::Div(Box::new(e), Box::new(self.factor()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            let k = self.integer()? as i32;
            return Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| self.error("expected an integer"))
    }

    fn index(&mut self) -> Result<usize> {
        let k = self.integer()?;
        k.checked_sub(1).ok_or_else(|| self.error("indices start at 1"))
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).expect("ascii letters")
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_digit()
                        || self.s[self.pos] == b'.'
                        || self.s[self.pos] == b'e'
                        || (self.s[self.pos] == b'-' && self.s[self.pos - 1] == b'e'))
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                let v: f64 = text.parse().map_err(|_| self.error("bad number"))?;
                Ok(Expr::Num(Complex64::new(v, 0.0)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let w = self.word().to_string();
                match w.as_str() {
                    "i" => Ok(Expr::Num(Complex64::new(0.0, 1.0))),
                    "det" => Ok(Expr::Det),
                    "z" => {
                        if self.eat(b'(') {
                            let i = self.index()?;
                            if !self.eat(b',') {
                                return Err(self.error("expected ','"));
                            }
                            let j = self.index()?;
                            if !self.eat(b')') {
                                return Err(self.error("expected ')'"));
                            }
                            Ok(Expr::Entry(i, j))
                        } else {
                            // z12: one digit per index
                            let d = self.integer()?;
                            if !(11..=99).contains(&d) || d % 10 == 0 {
                                return Err(self.error("write z(i,j) for this entry"));
                            }
                            Ok(Expr::Entry(d / 10 - 1, d % 10 - 1))
                        }
                    }
                    "dz" => {
                        if !self.eat(b'(') {
                            return Err(self.error("expected dz(k,i,j)"));
                        }
                        let k = self.index()?;
                        let mut idx = [0usize; 2];
                        for slot in &mut idx {
                            if !self.eat(b',') {
                                return Err(self.error("expected ','"));
                            }
                            *slot = self.index()?;
                        }
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(Expr::Deriv(k, idx[0], idx[1]))
                    }
                    _ => Err(self.error(&format!("unknown name '{w}'"))),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn parse_and_evaluate() {
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = |s: &str| Expr::parse(s).unwrap().eval(&z, &[]).unwrap();
        assert_eq!(v("z11/z22"), c(0.25, 0.0));
        assert_eq!(v("z(1,2) * z21 - 1"), c(5.0, 0.0));
        assert_eq!(v("-z11^2 + 2*i"), c(-1.0, 2.0));
        assert_eq!(v("det"), c(-2.0, 0.0));
        assert_eq!(v("z22^-1"), c(0.25, 0.0));
        assert!((v("1.5e-1 * (z11 + z12)") - c(0.45, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn derivatives_need_data() {
        let e = Expr::parse("dz(1,1,1) / z11").unwrap();
        assert!(e.uses_t_derivatives());
        let z = CMatrix::identity(2, 2);
        assert!(e.eval(&z, &[]).is_err());
        assert_eq!(e.eval(&z, &[z.clone() * c(3.0, 0.0)]).unwrap(), c(3.0, 0.0));
    }

    #[test]
    fn malformed() {
        for s in ["z1", "z(0,1)", "foo", "z11 +", "(z11", "z11 z22"] {
            assert!(Expr::parse(s).is_err(), "{s}");
        }
    }
}
