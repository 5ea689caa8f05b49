//! Rational functions of the parameter tuple `t` and matrices over them.

mod coeff;
mod matrix;
mod point;
mod poly;
mod rational;

pub use coeff::Coeff;
pub use matrix::{Mat, ParamMatrix};
pub use point::ParamPoint;
pub use poly::Poly;
pub use rational::{ParamRational, DENOMINATOR_EPS};
