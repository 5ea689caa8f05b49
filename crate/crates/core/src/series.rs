//! Truncated matrix Laurent series in powers of `u = x - alpha(t)`.
//!
//! A series stores the coefficients for orders `low..=truncation`. Unless the
//! series is flagged `exact`, the terms above the truncation order are
//! unknown, and every operation reports the highest order it can guarantee:
//! a product of a series starting at `u^-2` with one known through `u^5`
//! is only known through `u^3`, whatever the other factor's truncation.

use crate::error::{Error, Result};
use crate::param::{Coeff, Mat, ParamPoint, ParamRational};
use crate::{CMatrix, Complex64};

/// Minimum number of regular coefficients needed by [`MatrixLaurentSeries::estimate_radius`].
pub const RADIUS_WINDOW: i64 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixLaurentSeries<E> {
    n: usize,
    center: E,
    low: i64,
    coeffs: Vec<Mat<E>>,
    exact: bool,
}

/// Series with symbolic coefficients in `t`.
pub type ParamSeries = MatrixLaurentSeries<ParamRational>;
/// Series at a fixed parameter point.
pub type NumericSeries = MatrixLaurentSeries<Complex64>;

impl<E: Coeff> MatrixLaurentSeries<E> {
    /// Build from coefficients of orders `low, low+1, ...`.
    pub fn new(center: E, low: i64, coeffs: Vec<Mat<E>>) -> Result<Self> {
        let n = match coeffs.first() {
            Some(c) => c.n(),
            None => {
                return Err(Error::InvalidInput(
                    "series needs at least one coefficient".into(),
                ))
            }
        };
        if coeffs.iter().any(|c| c.n() != n) {
            return Err(Error::InvalidInput(
                "series coefficients differ in size".into(),
            ));
        }
        Ok(MatrixLaurentSeries {
            n,
            center,
            low,
            coeffs,
            exact: false,
        })
    }

    /// A Laurent polynomial: every coefficient past the last stored one is zero.
    pub fn exact(center: E, low: i64, coeffs: Vec<Mat<E>>) -> Result<Self> {
        let mut s = Self::new(center, low, coeffs)?;
        s.exact = true;
        Ok(s)
    }

    pub fn zero(n: usize, center: E, low: i64, truncation: i64) -> Self {
        let len = (truncation - low + 1).max(1) as usize;
        MatrixLaurentSeries {
            n,
            center,
            low,
            coeffs: vec![Mat::zeros(n); len],
            exact: false,
        }
    }

    pub fn identity(n: usize, center: E, truncation: i64) -> Self {
        let mut s = Self::zero(n, center, 0, truncation.max(0));
        s.coeffs[0] = Mat::identity(n);
        s
    }

    /// Exact constant series.
    pub fn constant(center: E, m: Mat<E>) -> Self {
        MatrixLaurentSeries {
            n: m.n(),
            center,
            low: 0,
            coeffs: vec![m],
            exact: true,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &E {
        &self.center
    }

    pub fn low_order(&self) -> i64 {
        self.low
    }

    pub fn truncation(&self) -> i64 {
        self.low + self.coeffs.len() as i64 - 1
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn coeffs(&self) -> &[Mat<E>] {
        &self.coeffs
    }

    /// Coefficient of `u^i`, if stored.
    pub fn coeff(&self, i: i64) -> Option<&Mat<E>> {
        if i < self.low {
            return None;
        }
        self.coeffs.get((i - self.low) as usize)
    }

    /// Coefficient of `u^i`, zero below `low` and (for exact series) above
    /// the truncation.
    pub fn coeff_or_zero(&self, i: i64) -> Mat<E> {
        self.coeff(i).cloned().unwrap_or_else(|| Mat::zeros(self.n))
    }

    /// First order with a structurally nonzero coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|k| self.low + k as i64)
    }

    /// Upper end of the known range, `None` when exact.
    fn precision(&self) -> Option<i64> {
        if self.exact {
            None
        } else {
            Some(self.truncation())
        }
    }

    fn check_compatible(&self, o: &Self) -> Result<()> {
        if self.n != o.n || self.center != o.center {
            return Err(Error::CenterMismatch);
        }
        Ok(())
    }

    fn from_range(&self, low: i64, high: i64, exact: bool, f: impl Fn(i64) -> Mat<E>) -> Self {
        let high = high.max(low);
        MatrixLaurentSeries {
            n: self.n,
            center: self.center.clone(),
            low,
            coeffs: (low..=high).map(f).collect(),
            exact,
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        let low = self.low.min(o.low);
        let (high, exact) = match (self.precision(), o.precision()) {
            (None, None) => (self.truncation().max(o.truncation()), true),
            (Some(a), None) => (a, false),
            (None, Some(b)) => (b, false),
            (Some(a), Some(b)) => (a.min(b), false),
        };
        Ok(self.from_range(low, high, exact, |i| {
            self.coeff_or_zero(i).plus(&o.coeff_or_zero(i))
        }))
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.negate())
    }

    pub fn negate(&self) -> Self {
        MatrixLaurentSeries {
            coeffs: self.coeffs.iter().map(Mat::negate).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, s: &E) -> Self {
        MatrixLaurentSeries {
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
            ..self.clone()
        }
    }

    /// Multiply every coefficient on the left by a constant matrix.
    pub fn left_mul_const(&self, m: &Mat<E>) -> Self {
        MatrixLaurentSeries {
            coeffs: self.coeffs.iter().map(|c| m.times(c)).collect(),
            ..self.clone()
        }
    }

    pub fn right_mul_const(&self, m: &Mat<E>) -> Self {
        MatrixLaurentSeries {
            coeffs: self.coeffs.iter().map(|c| c.times(m)).collect(),
            ..self.clone()
        }
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        let va = self.valuation().unwrap_or(self.truncation() + 1);
        let vb = o.valuation().unwrap_or(o.truncation() + 1);
        let low = self.low + o.low;
        let (high, exact) = match (self.precision(), o.precision()) {
            (None, None) => (self.truncation() + o.truncation(), true),
            (Some(a), None) => (a + vb, false),
            (None, Some(b)) => (va + b, false),
            (Some(a), Some(b)) => ((a + vb).min(va + b), false),
        };
        Ok(self.from_range(low, high, exact, |k| {
            let mut acc = Mat::zeros(self.n);
            for (idx, a) in self.coeffs.iter().enumerate() {
                let i = self.low + idx as i64;
                if a.is_zero() {
                    continue;
                }
                if let Some(b) = o.coeff(k - i) {
                    if !b.is_zero() {
                        acc = acc.plus(&a.times(b));
                    }
                }
            }
            acc
        }))
    }

    /// Multiply by `u^k`.
    pub fn shift(&self, k: i64) -> Self {
        MatrixLaurentSeries {
            low: self.low + k,
            ..self.clone()
        }
    }

    /// Drop everything above `order`; the result is no longer exact.
    pub fn truncate(&self, order: i64) -> Self {
        let keep = (order - self.low + 1).clamp(1, self.coeffs.len() as i64) as usize;
        let mut s = self.clone();
        s.coeffs.truncate(keep);
        if order < self.truncation() || !self.exact {
            s.exact = false;
        }
        s
    }

    /// Extend an exact series with explicit zeros up to `order`.
    pub fn padded(&self, order: i64) -> Self {
        let mut s = self.clone();
        if self.exact {
            while s.truncation() < order {
                s.coeffs.push(Mat::zeros(self.n));
            }
        }
        s
    }

    /// Euler operator `delta = u d/du`: coefficient `i` becomes `i * A_i`.
    pub fn delta(&self) -> Self {
        MatrixLaurentSeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.scale(&E::from_i64(self.low + k as i64)))
                .collect(),
            ..self.clone()
        }
    }

    /// `d/dx` (equivalently `d/du`): lowers every order by one.
    pub fn derivative(&self) -> Self {
        self.delta().shift(-1)
    }

    /// Inverse using the natural precision of the input (`truncation - 2v`
    /// where `v` is the valuation). Exact inputs stay exact when the result
    /// is a Laurent polynomial that can be certified as such.
    pub fn invert(&self, t: &ParamPoint) -> Result<Self> {
        let v = self.valuation().ok_or(Error::SingularLeadingCoefficient)?;
        self.invert_to(t, self.truncation() - 2 * v)
    }

    /// Inverse known through order `order` (capped by the input precision
    /// when the input is not exact).
    pub fn invert_to(&self, t: &ParamPoint, order: i64) -> Result<Self> {
        let v = self.valuation().ok_or(Error::SingularLeadingCoefficient)?;
        let lead = self.coeff(v).expect("valuation is stored");
        match lead.inverse_at(t) {
            Ok(r) => Ok(self.invert_regular(v, &r, order)),
            Err(Error::SingularMatrix) => self.invert_by_adjugate(t, order),
            Err(e) => Err(e),
        }
    }

    fn invert_regular(&self, v: i64, lead_inv: &Mat<E>, order: i64) -> Self {
        // S = u^v (S_v + S_{v+1} u + ...), inverse = u^-v (U_0 + U_1 u + ...)
        let order = match self.precision() {
            Some(p) => order.min(p - 2 * v),
            None => order,
        };
        let terms = (order + v).max(0) as usize;
        let monomial = self.exact
            && ((v + 1)..=self.truncation()).all(|k| self.coeff(k).is_none_or(Mat::is_zero));
        let mut u: Vec<Mat<E>> = vec![lead_inv.clone()];
        for k in 1..=terms {
            let mut acc = Mat::zeros(self.n);
            for j in 1..=k {
                if let Some(s) = self.coeff(v + j as i64) {
                    if !s.is_zero() {
                        acc = acc.plus(&s.times(&u[k - j]));
                    }
                }
            }
            u.push(lead_inv.times(&acc).negate());
        }
        if monomial {
            u.truncate(1);
        }
        MatrixLaurentSeries {
            n: self.n,
            center: self.center.clone(),
            low: -v,
            coeffs: u,
            exact: monomial,
        }
    }

    fn entry_series(&self, i: usize, j: usize) -> MatrixLaurentSeries<E> {
        MatrixLaurentSeries {
            n: 1,
            center: self.center.clone(),
            low: self.low,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Mat::scalar(1, c.get(i, j).clone()))
                .collect(),
            exact: self.exact,
        }
    }

    fn invert_by_adjugate(&self, t: &ParamPoint, order: i64) -> Result<Self> {
        let n = self.n;
        let entries: Vec<Vec<Self>> = (0..n)
            .map(|i| (0..n).map(|j| self.entry_series(i, j)).collect())
            .collect();
        let all: Vec<usize> = (0..n).collect();
        let det = minor_det(&entries, &all, &all)?;
        let dv = det.valuation().ok_or(Error::SingularLeadingCoefficient)?;
        let lead = det.coeff(dv).expect("stored").get(0, 0).value_at(t)?;
        let scale = det
            .coeffs
            .iter()
            .map(|c| c.get(0, 0).value_at(t).map(|z| z.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0_f64, f64::max);
        if lead.norm() <= 1e-12 * scale.max(1e-300) {
            return Err(Error::SingularLeadingCoefficient);
        }
        // adjugate entries: (-1)^{i+j} M_{ji}
        let mut adj: Vec<Vec<Self>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let m = if n == 1 {
                    Self::constant(self.center.clone(), Mat::identity(1))
                } else {
                    minor_det(&entries, &rows, &cols)?
                };
                row.push(if (i + j) % 2 == 1 { m.negate() } else { m });
            }
            adj.push(row);
        }
        let adj_val = adj
            .iter()
            .flatten()
            .filter_map(|s| s.valuation())
            .min()
            .unwrap_or(0);
        let det_inv = det.invert_to(t, order - adj_val)?;
        let mut out: Option<Self> = None;
        let mut cells = Vec::with_capacity(n * n);
        for row in &adj {
            for a in row {
                cells.push(a.mul(&det_inv)?);
            }
        }
        let low = cells.iter().map(|c| c.low).min().unwrap_or(0);
        let exact = cells.iter().all(|c| c.exact);
        let high = if exact {
            cells.iter().map(|c| c.truncation()).max().unwrap_or(low)
        } else {
            cells
                .iter()
                .filter(|c| !c.exact)
                .map(|c| c.truncation())
                .min()
                .unwrap_or(low)
                .min(order.max(low))
        };
        for k in low..=high.max(low) {
            let m = Mat::from_fn(n, |i, j| {
                cells[i * n + j]
                    .coeff(k)
                    .map(|c| c.get(0, 0).clone())
                    .unwrap_or_else(E::zero)
            });
            match out.as_mut() {
                None => {
                    out = Some(MatrixLaurentSeries {
                        n,
                        center: self.center.clone(),
                        low,
                        coeffs: vec![m],
                        exact,
                    })
                }
                Some(s) => s.coeffs.push(m),
            }
        }
        Ok(out.expect("at least one order"))
    }

    /// Numeric series at a fixed parameter point.
    pub fn at(&self, t: &ParamPoint) -> Result<NumericSeries> {
        Ok(MatrixLaurentSeries {
            n: self.n,
            center: self.center.value_at(t)?,
            low: self.low,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.eval(t).map(|m| Mat::from_dmatrix(&m)))
                .collect::<Result<Vec<_>>>()?,
            exact: self.exact,
        })
    }

    /// Evaluate the truncated sum at `x`.
    pub fn eval(&self, x: Complex64, t: &ParamPoint) -> Result<CMatrix> {
        let u = x - self.center.value_at(t)?;
        if u.norm() == 0.0 && self.valuation().is_some_and(|v| v < 0) {
            return Err(Error::SampleAtSingularity { x: [x.re, x.im] });
        }
        let mut acc = CMatrix::zeros(self.n, self.n);
        // Horner in u from the top, then rescale by u^low
        for c in self.coeffs.iter().rev() {
            acc = acc * u + c.eval(t)?;
        }
        Ok(acc * u.powi(self.low as i32))
    }

    /// Radius-of-convergence estimate of the regular part at `t`.
    ///
    /// Ratio test over the last [`RADIUS_WINDOW`] coefficient norms, with a
    /// root-test fallback when the ratios oscillate or hit zeros. Returns
    /// `f64::INFINITY` when the trailing coefficients vanish.
    pub fn estimate_radius(&self, t: &ParamPoint) -> Result<f64> {
        let trunc = self.truncation();
        if trunc < self.low + RADIUS_WINDOW {
            return Err(Error::InsufficientTruncation {
                truncation: trunc,
                required: self.low + RADIUS_WINDOW,
            });
        }
        let start = (trunc - RADIUS_WINDOW + 1).max(1);
        let mut norms = Vec::new();
        for k in start..=trunc {
            norms.push((k, self.coeff_or_zero(k).eval(t)?.norm()));
        }
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.eval(t).map(|m| m.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0_f64, f64::max);
        let tiny = 1e-300_f64.max(1e-14 * scale);
        if self.exact || norms.iter().all(|&(_, v)| v <= tiny) {
            return Ok(f64::INFINITY);
        }
        let ratios: Vec<f64> = norms
            .windows(2)
            .filter(|w| w[0].1 > tiny && w[1].1 > tiny)
            .map(|w| w[0].1 / w[1].1)
            .collect();
        if ratios.len() == norms.len() - 1 && !ratios.is_empty() {
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            if hi <= 1.5 * lo {
                let tail = &ratios[ratios.len().saturating_sub(3)..];
                return Ok(tail.iter().sum::<f64>() / tail.len() as f64);
            }
        }
        // root test: limsup |c_k|^(1/k) over the window
        let limsup = norms
            .iter()
            .filter(|&&(k, v)| k > 0 && v > tiny)
            .map(|&(k, v)| v.powf(1.0 / k as f64))
            .fold(0.0, f64::max);
        if limsup == 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok(1.0 / limsup)
        }
    }
}

/// Determinant of the submatrix of scalar series picked by `rows` x `cols`
/// (Laplace expansion along the first row).
fn minor_det<E: Coeff>(
    entries: &[Vec<MatrixLaurentSeries<E>>],
    rows: &[usize],
    cols: &[usize],
) -> Result<MatrixLaurentSeries<E>> {
    if rows.len() == 1 {
        return Ok(entries[rows[0]][cols[0]].clone());
    }
    let mut acc: Option<MatrixLaurentSeries<E>> = None;
    for (k, &c) in cols.iter().enumerate() {
        let e = &entries[rows[0]][c];
        if e.valuation().is_none() && e.exact {
            continue;
        }
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let mut term = e.mul(&minor_det(entries, &rows[1..], &sub_cols)?)?;
        if k % 2 == 1 {
            term = term.negate();
        }
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    Ok(acc.unwrap_or_else(|| {
        let proto = &entries[rows[0]][cols[0]];
        MatrixLaurentSeries::constant(proto.center.clone(), Mat::zeros(1))
    }))
}

impl NumericSeries {
    /// Scalar series (n = 1) from complex coefficients.
    pub fn scalar_series(center: Complex64, low: i64, coeffs: &[Complex64]) -> Self {
        MatrixLaurentSeries {
            n: 1,
            center,
            low,
            coeffs: coeffs.iter().map(|&c| Mat::scalar(1, c)).collect(),
            exact: false,
        }
    }

    /// Coefficients as nalgebra matrices.
    pub fn dense_coeffs(&self) -> Vec<CMatrix> {
        self.coeffs.iter().map(Mat::to_dmatrix).collect()
    }

    /// Drop leading coefficients whose norm is below `tol` (relative to the
    /// largest coefficient) and raise the low order accordingly.
    pub fn trim_leading(&self, tol: f64) -> Self {
        let norms: Vec<f64> = self.coeffs.iter().map(|c| c.to_dmatrix().norm()).collect();
        let scale = norms.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let skip = norms
            .iter()
            .position(|&v| v > tol * scale)
            .unwrap_or(norms.len() - 1);
        MatrixLaurentSeries {
            n: self.n,
            center: self.center,
            low: self.low + skip as i64,
            coeffs: self.coeffs[skip..].to_vec(),
            exact: self.exact,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn origin() -> ParamPoint {
        ParamPoint::real(&[0.0])
    }

    fn scalar(low: i64, coeffs: &[f64]) -> NumericSeries {
        let v: Vec<Complex64> = coeffs.iter().map(|&x| c(x)).collect();
        NumericSeries::scalar_series(c(0.0), low, &v)
    }

    fn values(s: &NumericSeries) -> Vec<f64> {
        s.coeffs().iter().map(|m| m.get(0, 0).re).collect()
    }

    #[test]
    fn polynomial_product() {
        let a = scalar(0, &[1.0, 1.0, 0.0, 0.0]);
        let b = scalar(0, &[1.0, -1.0, 0.0, 0.0]);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.truncation(), 3);
        assert_eq!(values(&p), vec![1.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn geometric_inverse() {
        let a = scalar(0, &[1.0, -1.0, 0.0, 0.0]);
        let inv = a.invert(&origin()).unwrap();
        assert_eq!(inv.low_order(), 0);
        assert_eq!(values(&inv), vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn negative_valuation_costs_precision() {
        // u^-2 (1 + ...) known through u^5 times a series known through u^5
        let a = scalar(-2, &[1.0; 8]);
        let b = scalar(0, &[1.0; 6]);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.low_order(), -2);
        assert_eq!(p.truncation(), 3);
    }

    #[test]
    fn delta_scales_by_order() {
        let a = scalar(-2, &[1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(values(&a.delta()), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let k = scalar(0, &[3.0]);
        assert!(k.delta().coeffs()[0].is_zero());
    }

    #[test]
    fn center_mismatch() {
        let a = scalar(0, &[1.0]);
        let b = NumericSeries::scalar_series(c(1.0), 0, &[c(1.0)]);
        assert_eq!(a.mul(&b).unwrap_err(), Error::CenterMismatch);
        assert_eq!(a.add(&b).unwrap_err(), Error::CenterMismatch);
    }

    #[test]
    fn radius_estimates() {
        let geo = scalar(0, &[1.0; 17]);
        let r = geo.estimate_radius(&origin()).unwrap();
        assert!((0.8..=1.25).contains(&r), "{r}");
        let half: Vec<f64> = (0..17).map(|k| 2f64.powi(k)).collect();
        let r = scalar(0, &half).estimate_radius(&origin()).unwrap();
        assert!((0.4..=0.625).contains(&r), "{r}");
        let mut poly = vec![0.0; 17];
        poly[0] = 1.0;
        poly[1] = 1.0;
        assert_eq!(
            scalar(0, &poly).estimate_radius(&origin()).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            scalar(0, &[1.0; 5]).estimate_radius(&origin()),
            Err(Error::InsufficientTruncation { .. })
        ));
    }

    #[test]
    fn root_test_handles_even_series() {
        // 1/(1 - 4u^2): odd coefficients vanish, radius 1/2
        let coeffs: Vec<f64> = (0..17)
            .map(|k| if k % 2 == 0 { 4f64.powi(k / 2) } else { 0.0 })
            .collect();
        let r = scalar(0, &coeffs).estimate_radius(&origin()).unwrap();
        assert!((0.4..=0.625).contains(&r), "{r}");
    }

    #[test]
    fn singular_leading_coefficient() {
        let z = scalar(0, &[0.0, 0.0]);
        assert_eq!(
            z.invert(&origin()).unwrap_err(),
            Error::SingularLeadingCoefficient
        );
    }
}
