//! Analysis of parameterized linear ODE systems `dY/dx = A(x, t) Y` with
//! moving regular singularities.

pub mod continuation;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod normal_form;
pub mod param;
pub mod rationality;
pub mod rh;
pub mod series;
pub mod systems;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used for all numeric linear algebra.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
