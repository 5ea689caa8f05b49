use std::fmt;

use crate::error::{Error, Result};
use crate::param::{ParamPoint, ParamRational};
use crate::Complex64;

/// Coefficient domain for matrices and series: either exact rational
/// functions of the parameters or plain complex numbers (parameters fixed).
pub trait Coeff: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_complex(c: Complex64) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    /// Exact reciprocal; fails only for the zero element.
    fn recip(&self) -> Result<Self>;
    /// Structural zero test (exact, no tolerance).
    fn is_zero(&self) -> bool;
    fn value_at(&self, t: &ParamPoint) -> Result<Complex64>;

    fn from_i64(k: i64) -> Self {
        Self::from_complex(Complex64::new(k as f64, 0.0))
    }
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_complex(c: Complex64) -> Self {
        c
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn recip(&self) -> Result<Self> {
        if *self == Complex64::new(0.0, 0.0) {
            Err(Error::DivisionByZeroFunction)
        } else {
            Ok(self.inv())
        }
    }
    fn is_zero(&self) -> bool {
        *self == Complex64::new(0.0, 0.0)
    }
    fn value_at(&self, _t: &ParamPoint) -> Result<Complex64> {
        Ok(*self)
    }
}

impl Coeff for ParamRational {
    fn zero() -> Self {
        ParamRational::zero()
    }
    fn one() -> Self {
        ParamRational::one()
    }
    fn from_complex(c: Complex64) -> Self {
        ParamRational::constant(c)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn recip(&self) -> Result<Self> {
        self.inv()
    }
    fn is_zero(&self) -> bool {
        ParamRational::is_zero(self)
    }
    fn value_at(&self, t: &ParamPoint) -> Result<Complex64> {
        self.eval(t)
    }
}
