//! Reduction of `delta Y = (A_0 + u A_1 + ...) Y`, `u = x - alpha(t)`, to the
//! constant form `delta Z = A~ Z`: Sylvester recurrence, shearing of
//! resonant eigenvalues, local solutions and a moderate-growth probe.

mod growth;
mod shear;
mod solution;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{complex_out, matrix_out, MatrixJson, NumericSeriesJson};
use crate::linalg::{eigenvalues, sylvester_kron};
use crate::param::{Mat, ParamMatrix, ParamPoint, ParamRational};
use crate::series::{NumericSeries, ParamSeries};
use crate::systems::LinearSystem;
use crate::{CMatrix, Complex64};

pub use growth::{moderate_growth_check, GrowthVerdict, Sector};
pub use shear::{max_integer_gap, shearing, ShearStep, Shearing};
pub use solution::{local_solution, LocalSolution};

/// Absolute band deciding that two eigenvalues differ by an integer.
pub const EPS_INT: f64 = 1e-8;
/// Default series truncation.
pub const DEFAULT_TRUNCATION: i64 = 20;

/// `delta Y = (sum_{i >= 0} u^i A_i) Y` with `A_0` not identically zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FuchsLocalSystem {
    series: ParamSeries,
}

impl FuchsLocalSystem {
    pub fn new(series: ParamSeries) -> Result<Self> {
        let mut s = series;
        if s.low_order() < 0 {
            if (s.low_order()..0).any(|k| !s.coeff_or_zero(k).is_zero()) {
                return Err(Error::InvalidLocalSystem(
                    "negative powers of u in delta-form".into(),
                ));
            }
            let coeffs = s.coeffs()[(-s.low_order()) as usize..].to_vec();
            if coeffs.is_empty() {
                return Err(Error::InvalidLocalSystem(
                    "no coefficients at nonnegative orders".into(),
                ));
            }
            s = if s.is_exact() {
                ParamSeries::exact(s.center().clone(), 0, coeffs)?
            } else {
                ParamSeries::new(s.center().clone(), 0, coeffs)?
            };
        }
        if s.low_order() > 0 || s.coeff_or_zero(0).is_zero() {
            return Err(Error::InvalidLocalSystem("A0 is identically zero".into()));
        }
        Ok(FuchsLocalSystem { series: s })
    }

    /// Constant-in-`t` coefficients `A_0, A_1, ...` around `center`.
    pub fn from_matrices(center: Complex64, coeffs: &[CMatrix], exact: bool) -> Result<Self> {
        let mats: Vec<ParamMatrix> = coeffs.iter().map(ParamMatrix::constant).collect();
        let c = ParamRational::constant(center);
        let s = if exact {
            ParamSeries::exact(c, 0, mats)?
        } else {
            ParamSeries::new(c, 0, mats)?
        };
        Self::new(s)
    }

    /// The delta-form of a simple pole of `sys`, known through `order`.
    pub fn from_pole(sys: &LinearSystem, index: usize, order: i64, t: &ParamPoint) -> Result<Self> {
        let pole = sys
            .poles()
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("no pole with index {index}")))?;
        if pole.order() != 1 {
            return Err(Error::InvalidLocalSystem(format!(
                "pole {index} has order {}; transform it to a simple pole first",
                pole.order()
            )));
        }
        Self::new(sys.localize(index, order - 1, t)?.shift(1))
    }

    pub fn series(&self) -> &ParamSeries {
        &self.series
    }

    pub fn n(&self) -> usize {
        self.series.n()
    }

    pub fn a0(&self) -> &ParamMatrix {
        self.series.coeff(0).expect("low order is zero")
    }

    pub fn at(&self, t: &ParamPoint) -> Result<NumericSeries> {
        self.series.at(t)
    }
}

/// Positive integers `i <= max_order` equal (within [`EPS_INT`]) to an
/// eigenvalue difference of `a0`.
pub fn integer_gaps(a0: &CMatrix, max_order: usize) -> Vec<usize> {
    let eigs = eigenvalues(a0);
    let mut out = Vec::new();
    for (j, a) in eigs.iter().enumerate() {
        for (k, b) in eigs.iter().enumerate() {
            if j == k {
                continue;
            }
            let d = a - b;
            let r = d.re.round();
            if r >= 1.0 && r <= max_order as f64 && (d - Complex64::new(r, 0.0)).norm() <= EPS_INT {
                out.push(r as usize);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The unique `P` with `A0 P - P (A0 + i I) = R`.
pub fn sylvester_step(a0: &CMatrix, i: usize, r: &CMatrix) -> Result<CMatrix> {
    if integer_gaps(a0, i).contains(&i) {
        return Err(Error::ResonantEigenvalues { order: i });
    }
    let n = a0.nrows();
    let shifted = a0 + CMatrix::identity(n, n) * Complex64::new(i as f64, 0.0);
    sylvester_kron(a0, &shifted, r).map_err(|e| match e {
        Error::SingularMatrix => Error::ResonantEigenvalues { order: i },
        other => other,
    })
}

/// `P = I + sum_{i=1..N} u^i P_i` with `delta(P Y) = A0 (P Y)`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub center: Complex64,
    pub a0: CMatrix,
    /// `P_0 = I, P_1, ..., P_N`.
    pub p: Vec<CMatrix>,
}

impl Reduction {
    pub fn series(&self) -> NumericSeries {
        NumericSeries::new(
            self.center,
            0,
            self.p.iter().map(Mat::from_dmatrix).collect(),
        )
        .expect("P_0 is always present")
    }
}

/// Solve the recurrence `A0 P_i - P_i (A0 + i I) = A_i + P_1 A_{i-1} + ... + P_{i-1} A_1`.
pub fn reduce_to_constant(f: &FuchsLocalSystem, t: &ParamPoint, n: i64) -> Result<Reduction> {
    reduce_numeric(&f.at(t)?, n)
}

pub(crate) fn reduce_numeric(a: &NumericSeries, n: i64) -> Result<Reduction> {
    if n < 1 {
        return Err(Error::InvalidInput("truncation must be at least 1".into()));
    }
    if !a.is_exact() && a.truncation() < n {
        return Err(Error::InsufficientTruncation {
            truncation: a.truncation(),
            required: n,
        });
    }
    let dim = a.n();
    let coeffs: Vec<CMatrix> = (0..=n).map(|i| a.coeff_or_zero(i).to_dmatrix()).collect();
    let a0 = coeffs[0].clone();
    let mut p = vec![CMatrix::identity(dim, dim)];
    for i in 1..=n as usize {
        let mut rhs = coeffs[i].clone();
        for j in 1..i {
            rhs += &p[j] * &coeffs[i - j];
        }
        p.push(sylvester_step(&a0, i, &rhs)?);
    }
    Ok(Reduction {
        center: *a.center(),
        a0,
        p,
    })
}

/// Shearing followed by the reduction, at one parameter point.
#[derive(Clone, Debug)]
pub struct NormalFormResult {
    pub t: ParamPoint,
    /// `P` of the final (non-resonant) system.
    pub p: NumericSeries,
    /// First constant change of basis of the shearing (identity when none).
    pub c: CMatrix,
    /// Total integer shift of each eigenvalue of the original `A_0(t)`.
    pub s_exponents: Vec<u32>,
    pub atilde: CMatrix,
    pub shear: Shearing,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalFormJson {
    pub t: Vec<[f64; 2]>,
    #[serde(rename = "P")]
    pub p: NumericSeriesJson,
    #[serde(rename = "C")]
    pub c: MatrixJson,
    #[serde(rename = "Sexponents")]
    pub s_exponents: Vec<u32>,
    #[serde(rename = "Atilde")]
    pub atilde: MatrixJson,
    pub shear_steps: Vec<ShearStep>,
}

impl NormalFormResult {
    pub fn to_json(&self) -> NormalFormJson {
        NormalFormJson {
            t: self.t.coords().iter().map(|z| complex_out(*z)).collect(),
            p: NumericSeriesJson::from_series(&self.p),
            c: matrix_out(&self.c),
            s_exponents: self.s_exponents.clone(),
            atilde: matrix_out(&self.atilde),
            shear_steps: self.shear.steps.clone(),
        }
    }

    /// Largest `||A0 P_i - P_i (A0 + i I) - A_i - sum_j P_j A_{i-j}||`,
    /// relative to `1 + max ||A_i||`, over the orders of `P`.
    pub fn recurrence_residual(&self) -> f64 {
        let a = &self.shear.series;
        let coeffs: Vec<CMatrix> = (0..self.p.coeffs().len() as i64)
            .map(|i| a.coeff_or_zero(i).to_dmatrix())
            .collect();
        let p: Vec<CMatrix> = self.p.coeffs().iter().map(|m| m.to_dmatrix()).collect();
        let scale = 1.0 + coeffs.iter().map(|m| m.norm()).fold(0.0, f64::max);
        let n = self.atilde.nrows();
        let mut worst: f64 = 0.0;
        for i in 1..p.len() {
            let shifted = &self.atilde + CMatrix::identity(n, n) * Complex64::new(i as f64, 0.0);
            let mut r = &self.atilde * &p[i] - &p[i] * shifted - &coeffs[i];
            for j in 1..i {
                r -= &p[j] * &coeffs[i - j];
            }
            worst = worst.max(r.norm() / scale);
        }
        worst
    }
}

/// Shear until non-resonant, then reduce through order `n`.
pub fn normal_form(f: &FuchsLocalSystem, t: &ParamPoint, n: i64) -> Result<NormalFormResult> {
    let sh = shear::shear_numeric(&f.at(t)?)?;
    let red = reduce_numeric(&sh.series, n)?;
    let c = sh
        .steps
        .first()
        .map(|s| s.basis())
        .unwrap_or_else(|| CMatrix::identity(f.n(), f.n()));
    Ok(NormalFormResult {
        t: t.clone(),
        p: red.series(),
        c,
        s_exponents: sh.exponents.clone(),
        atilde: red.a0,
        shear: sh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| c(x, 0.0)),
        ))
    }

    #[test]
    fn sylvester_examples() {
        let a0 = diag(&[0.0, 0.5]);
        let z = sylvester_step(&a0, 1, &CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(z.norm(), 0.0);
        let p = sylvester_step(&a0, 1, &CMatrix::identity(2, 2)).unwrap();
        assert!((p + CMatrix::identity(2, 2)).norm() < 1e-14);
        let mut r = CMatrix::zeros(2, 2);
        r[(1, 0)] = c(1.0, 0.0);
        assert_eq!(
            sylvester_step(&diag(&[0.0, 1.0]), 1, &r).unwrap_err(),
            Error::ResonantEigenvalues { order: 1 }
        );
    }

    #[test]
    fn two_steps_of_the_recurrence() {
        let id = CMatrix::identity(2, 2);
        let f =
            FuchsLocalSystem::from_matrices(c(0.0, 0.0), &[diag(&[0.0, 0.5]), id.clone()], true)
                .unwrap();
        let red = reduce_to_constant(&f, &ParamPoint::real(&[0.0]), 2).unwrap();
        assert!((&red.p[1] + &id).norm() < 1e-14);
        assert!((&red.p[2] - &id * c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn recurrence_self_check() {
        let mut rng = crate::fixtures::rng(3);
        let f = crate::fixtures::random_local_system(&mut rng, 3, 6);
        let nf = normal_form(&f, &ParamPoint::real(&[0.2]), 10).unwrap();
        assert!(nf.recurrence_residual() < 1e-12);
    }

    #[test]
    fn constant_system_needs_no_gauge() {
        let f = FuchsLocalSystem::from_matrices(c(0.0, 0.0), &[diag(&[0.2, 0.7])], true).unwrap();
        let red = reduce_to_constant(&f, &ParamPoint::real(&[0.0]), 5).unwrap();
        assert!(red.p[1..].iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn zero_a0_is_rejected() {
        let err = FuchsLocalSystem::from_matrices(c(0.0, 0.0), &[CMatrix::zeros(2, 2)], true)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidLocalSystem(_)));
    }

    #[test]
    fn truncated_input_limits_the_order() {
        let f = FuchsLocalSystem::from_matrices(
            c(0.0, 0.0),
            &[diag(&[0.2, 0.7]), diag(&[1.0, 1.0])],
            false,
        )
        .unwrap();
        assert!(matches!(
            reduce_to_constant(&f, &ParamPoint::real(&[0.0]), 3),
            Err(Error::InsufficientTruncation { .. })
        ));
    }
}
