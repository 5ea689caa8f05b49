use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::param::{ParamPoint, Poly};
use crate::Complex64;

/// Relative threshold for declaring a denominator zero at a parameter point.
pub const DENOMINATOR_EPS: f64 = 1e-12;

/// Rational function of the parameters, `num(t) / den(t)`.
///
/// Results are not reduced by a polynomial gcd. Normalization only
/// makes the leading denominator coefficient one, folds constant
/// denominators into the numerator, cancels a common monomial factor, and
/// collapses proportional numerator/denominator pairs to a constant.
#[derive(Clone, PartialEq)]
pub struct ParamRational {
    num: Poly,
    den: Poly,
}

impl ParamRational {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZeroFunction);
        }
        Ok(ParamRational { num, den }.normalized())
    }

    pub fn from_poly(p: Poly) -> Self {
        ParamRational {
            num: p,
            den: Poly::constant(Complex64::new(1.0, 0.0)),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn real(c: f64) -> Self {
        Self::constant(Complex64::new(c, 0.0))
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    pub fn one() -> Self {
        Self::real(1.0)
    }

    /// The coordinate function `t_{k+1}`.
    pub fn var(k: usize) -> Self {
        Self::from_poly(Poly::var(k))
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_constant(&self) -> Option<Complex64> {
        match (self.num.as_constant(), self.den.as_constant()) {
            (Some(a), Some(b)) => Some(a / b),
            _ => None,
        }
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars().max(self.den.nvars())
    }

    fn normalized(self) -> Self {
        let ParamRational { mut num, mut den } = self;
        if num.is_zero() {
            return Self::zero();
        }
        if let Some(c) = den.as_constant() {
            return Self::from_poly(num.scale(c.inv()));
        }
        // common monomial factor
        let a = num.min_exponents();
        let b = den.min_exponents();
        let shift: Vec<u32> = (0..a.len().min(b.len())).map(|k| a[k].min(b[k])).collect();
        if shift.iter().any(|&s| s > 0) {
            num = num.divide_monomial(&shift);
            den = den.divide_monomial(&shift);
            if let Some(c) = den.as_constant() {
                return Self::from_poly(num.scale(c.inv()));
            }
        }
        let lead = *den.leading().expect("nonzero denominator").1;
        let (num, den) = (num.scale(lead.inv()), den.scale(lead.inv()));
        if let Some(lambda) = proportionality(&num, &den) {
            return Self::constant(lambda);
        }
        ParamRational { num, den }
    }

    /// Evaluate at `t`, failing with `PoleAtParameter` when the denominator
    /// is below `1e-12 * (1 + largest monomial magnitude)`.
    pub fn eval(&self, t: &ParamPoint) -> Result<Complex64> {
        let (d, scale) = self.den.eval_with_scale(t)?;
        if d.norm() <= DENOMINATOR_EPS * (1.0 + scale) {
            return Err(Error::PoleAtParameter { point: t.pairs() });
        }
        Ok(self.num.eval(t)? / d)
    }

    pub fn inv(&self) -> Result<Self> {
        ParamRational::new(self.den.clone(), self.num.clone())
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::DivisionByZeroFunction);
        }
        ParamRational::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ParamRational {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
        .normalized()
    }

    pub fn powi(&self, k: i32) -> Result<Self> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut out = Self::one();
        for _ in 0..k.unsigned_abs() {
            out = &out * &base;
        }
        Ok(out)
    }

    /// Partial derivative with respect to `t_{k+1}` (quotient rule).
    pub fn derivative(&self, k: usize) -> Self {
        let num = self
            .num
            .derivative(k)
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative(k)));
        ParamRational::new(num, self.den.mul(&self.den)).expect("nonzero denominator")
    }
}

/// `Some(lambda)` when `num = lambda * den` term by term.
fn proportionality(num: &Poly, den: &Poly) -> Option<Complex64> {
    if num.num_terms() != den.num_terms() {
        return None;
    }
    let mut lambda = None;
    for ((ea, ca), (eb, cb)) in num.terms().zip(den.terms()) {
        if ea != eb {
            return None;
        }
        let r = ca / cb;
        match lambda {
            None => lambda = Some(r),
            Some(l) => {
                if (r - l).norm() > 1e-14 * l.norm().max(1e-300) {
                    return None;
                }
            }
        }
    }
    lambda
}

impl Add for &ParamRational {
    type Output = ParamRational;
    fn add(self, o: &ParamRational) -> ParamRational {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return ParamRational {
                num: self.num.add(&o.num),
                den: self.den.clone(),
            }
            .normalized();
        }
        ParamRational {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
        .normalized()
    }
}

impl Neg for &ParamRational {
    type Output = ParamRational;
    fn neg(self) -> ParamRational {
        ParamRational {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

impl Sub for &ParamRational {
    type Output = ParamRational;
    fn sub(self, o: &ParamRational) -> ParamRational {
        self + &(-o)
    }
}

impl Mul for &ParamRational {
    type Output = ParamRational;
    fn mul(self, o: &ParamRational) -> ParamRational {
        if self.is_zero() || o.is_zero() {
            return ParamRational::zero();
        }
        if let Some(c) = self.as_constant() {
            return o.scale(c);
        }
        if let Some(c) = o.as_constant() {
            return self.scale(c);
        }
        ParamRational {
            num: self.num.mul(&o.num),
            den: self.den.mul(&o.den),
        }
        .normalized()
    }
}

impl Div for &ParamRational {
    type Output = Result<ParamRational>;
    fn div(self, o: &ParamRational) -> Result<ParamRational> {
        self.try_div(o)
    }
}

impl fmt::Debug for ParamRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.den.as_constant() {
            Some(c) if c == Complex64::new(1.0, 0.0) => write!(f, "{:?}", self.num),
            _ => write!(f, "[{:?}] / [{:?}]", self.num, self.den),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: f64) -> ParamPoint {
        ParamPoint::real(&[v])
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_evaluates_everywhere() {
        let one = ParamRational::one();
        assert_eq!(one.eval(&t(17.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(one.eval(&ParamPoint::real(&[])).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn moving_pole_location_at_origin() {
        assert_eq!(ParamRational::var(0).eval(&t(0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn rational_vanishes_at_root_of_numerator() {
        // (t^2 + 1)/(t - 2) at t = i
        let num = Poly::var(0)
            .mul(&Poly::var(0))
            .add(&Poly::constant(c(1.0, 0.0)));
        let den = Poly::var(0).sub(&Poly::constant(c(2.0, 0.0)));
        let f = ParamRational::new(num, den).unwrap();
        let v = f.eval(&ParamPoint::new(vec![c(0.0, 1.0)])).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn pole_is_reported() {
        let f = ParamRational::var(0).inv().unwrap();
        assert!(matches!(
            f.eval(&t(0.0)),
            Err(Error::PoleAtParameter { .. })
        ));
        assert!(f.eval(&t(1e-6)).is_ok());
    }

    #[test]
    fn add_cancels_to_constant() {
        let a = ParamRational::var(0);
        let b = &ParamRational::one() - &ParamRational::var(0);
        assert_eq!((&a + &b).as_constant(), Some(c(1.0, 0.0)));
    }

    #[test]
    fn mul_inverse_pair_is_one() {
        let a = ParamRational::var(0).inv().unwrap();
        let p = &a * &ParamRational::var(0);
        assert_eq!(p.as_constant(), Some(c(1.0, 0.0)));
    }

    #[test]
    fn unreduced_division_still_evaluates() {
        let x = ParamRational::var(0);
        let one = ParamRational::one();
        let num = &(&x * &x) - &one;
        let den = &x - &one;
        let q = (&num / &den).unwrap();
        assert!((q.eval(&t(2.0)).unwrap() - c(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn division_by_zero_function() {
        let r = &ParamRational::one() / &ParamRational::zero();
        assert_eq!(r.unwrap_err(), Error::DivisionByZeroFunction);
    }

    #[test]
    fn derivative_quotient_rule() {
        // d/dt (1/(t-2)) = -1/(t-2)^2 ; at t = 0 -> -1/4
        let f = (&ParamRational::one() / &(&ParamRational::var(0) - &ParamRational::real(2.0)))
            .unwrap();
        let d = f.derivative(0);
        assert!((d.eval(&t(0.0)).unwrap() - c(-0.25, 0.0)).norm() < 1e-15);
    }
}
