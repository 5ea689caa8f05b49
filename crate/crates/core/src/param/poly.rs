use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::param::ParamPoint;
use crate::Complex64;

/// Sparse multivariate polynomial in `t_1, ..., t_r` with complex coefficients.
///
/// Exponent vectors are stored without trailing zeros, so a polynomial does
/// not need to know `r`; evaluation checks that the point has enough
/// coordinates.
#[derive(Clone, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Vec<u32>, Complex64>,
}

fn canonical(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    /// The coordinate function `t_k` (zero-based `k`).
    pub fn var(k: usize) -> Self {
        let mut e = vec![0; k + 1];
        e[k] = 1;
        Poly::monomial(e, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(exponents: Vec<u32>, c: Complex64) -> Self {
        let mut p = Poly::zero();
        p.add_term(exponents, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, Complex64)>>(terms: I) -> Self {
        let mut p = Poly::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exponents: Vec<u32>, c: Complex64) {
        let key = canonical(exponents);
        let entry = self
            .terms
            .entry(key.clone())
            .or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Number of variables actually used.
    pub fn nvars(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// `Some(c)` if the polynomial is the constant `c` (zero included).
    pub fn as_constant(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    /// Term with the largest exponent vector in lexicographic order.
    pub fn leading(&self) -> Option<(&Vec<u32>, &Complex64)> {
        self.terms.iter().next_back()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        if s == Complex64::new(0.0, 0.0) {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let len = ea.len().max(eb.len());
                let e: Vec<u32> = (0..len)
                    .map(|k| ea.get(k).copied().unwrap_or(0) + eb.get(k).copied().unwrap_or(0))
                    .collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// Divide every exponent vector by the monomial `t^shift` (componentwise
    /// subtraction). The caller guarantees divisibility.
    pub(crate) fn divide_monomial(&self, shift: &[u32]) -> Poly {
        Poly::from_terms(self.terms.iter().map(|(e, c)| {
            let d: Vec<u32> = e
                .iter()
                .enumerate()
                .map(|(k, &x)| x - shift.get(k).copied().unwrap_or(0))
                .collect();
            (d, *c)
        }))
    }

    /// Componentwise minimum exponent over all terms.
    pub(crate) fn min_exponents(&self) -> Vec<u32> {
        let n = self.nvars();
        let mut m = vec![u32::MAX; n];
        for e in self.terms.keys() {
            for (k, slot) in m.iter_mut().enumerate() {
                *slot = (*slot).min(e.get(k).copied().unwrap_or(0));
            }
        }
        if self.terms.is_empty() {
            Vec::new()
        } else {
            canonical(m)
        }
    }

    fn check_dim(&self, t: &ParamPoint) -> Result<()> {
        let need = self.nvars();
        if need > t.dim() {
            return Err(Error::ParameterDimension {
                expected: need,
                got: t.dim(),
            });
        }
        Ok(())
    }

    fn monomial_values<'a>(&'a self, t: &'a ParamPoint) -> impl Iterator<Item = Complex64> + 'a {
        self.terms.iter().map(move |(e, c)| {
            e.iter()
                .zip(t.coords())
                .fold(*c, |acc, (&k, &tk)| acc * tk.powu(k))
        })
    }

    pub fn eval(&self, t: &ParamPoint) -> Result<Complex64> {
        self.check_dim(t)?;
        Ok(self.monomial_values(t).sum())
    }

    /// Value together with the largest monomial magnitude at `t`.
    pub(crate) fn eval_with_scale(&self, t: &ParamPoint) -> Result<(Complex64, f64)> {
        self.check_dim(t)?;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut scale: f64 = 0.0;
        for v in self.monomial_values(t) {
            sum += v;
            scale = scale.max(v.norm());
        }
        Ok((sum, scale))
    }

    /// Partial derivative with respect to `t_k`.
    pub fn derivative(&self, k: usize) -> Poly {
        Poly::from_terms(self.terms.iter().filter_map(|(e, c)| {
            let p = e.get(k).copied().unwrap_or(0);
            if p == 0 {
                return None;
            }
            let mut d = e.clone();
            d[k] = p - 1;
            Some((d, c * p as f64))
        }))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for (k, &p) in e.iter().enumerate() {
                if p > 0 {
                    write!(f, "*t{}^{}", k + 1, p)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn exact_cancellation_removes_terms() {
        let p = Poly::var(0).add(&Poly::constant(c(1.0)).sub(&Poly::var(0)));
        assert_eq!(p.as_constant(), Some(c(1.0)));
    }

    #[test]
    fn product_and_evaluation() {
        // (t1 + 1)(t1 - 1) = t1^2 - 1
        let a = Poly::var(0).add(&Poly::constant(c(1.0)));
        let b = Poly::var(0).sub(&Poly::constant(c(1.0)));
        let p = a.mul(&b);
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.eval(&ParamPoint::real(&[3.0])).unwrap(), c(8.0));
    }

    #[test]
    fn missing_coordinates_are_an_error() {
        let p = Poly::var(1);
        assert!(matches!(
            p.eval(&ParamPoint::real(&[1.0])),
            Err(Error::ParameterDimension { .. })
        ));
    }

    #[test]
    fn derivative_of_monomial() {
        let p = Poly::monomial(vec![2, 1], c(3.0));
        let d = p.derivative(0);
        assert_eq!(d, Poly::monomial(vec![1, 1], c(6.0)));
        assert!(p.derivative(2).is_zero());
    }
}
