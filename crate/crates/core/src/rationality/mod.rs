//! Wronskian-based detection of rationality in `x`, and the invariance
//! harness that feeds it with candidate functions of a fundamental matrix.

mod expr;
mod harness;

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::eigenvalues;
use crate::param::{ParamPoint, ParamRational};
use crate::Complex64;

pub use expr::{Candidate, Expr};
pub use harness::{invariance_rationality_harness, HarnessOptions, HarnessReport};

type TaylorFn<'a> = dyn Fn(Complex64, &ParamPoint, usize) -> Result<Vec<Complex64>> + Send + Sync + 'a;

/// Sampling region `inner <= |x - center| <= outer`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annulus {
    pub center: Complex64,
    pub inner: f64,
    pub outer: f64,
}

impl Default for Annulus {
    fn default() -> Self {
        Annulus {
            center: Complex64::new(0.0, 0.0),
            inner: 0.25,
            outer: 1.25,
        }
    }
}

impl Annulus {
    fn draw(&self, rng: &mut impl Rng) -> Complex64 {
        let (a, b) = (self.inner * self.inner, self.outer * self.outer);
        let r = (a + (b - a) * rng.gen::<f64>()).sqrt();
        self.center + Complex64::from_polar(r, TAU * rng.gen::<f64>())
    }
}

/// A function of `(x, t)` that can report its Taylor coefficients in `x`.
#[derive(Clone)]
pub struct SampledFunction<'a> {
    taylor: Arc<TaylorFn<'a>>,
    region: Arc<dyn Fn(&ParamPoint) -> Annulus + Send + Sync + 'a>,
    admissible: Arc<dyn Fn(Complex64, &ParamPoint) -> bool + Send + Sync + 'a>,
}

impl std::fmt::Debug for SampledFunction<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SampledFunction")
    }
}

/// Taylor coefficients at `x0` of the polynomial `p` (ascending powers).
fn shift_poly(p: &[Complex64], x0: Complex64, order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    // repeated synthetic division by (x - x0)
    let mut q = p.to_vec();
    for slot in out.iter_mut() {
        if q.is_empty() {
            break;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for c in q.iter_mut().rev() {
            acc = acc * x0 + *c;
            *c = acc;
        }
        *slot = q[0];
        q.remove(0);
    }
    out
}

/// Truncated quotient of power series.
fn series_div(a: &[Complex64], b: &[Complex64], order: usize) -> Result<Vec<Complex64>> {
    if b[0].norm() == 0.0 {
        return Err(Error::EvaluationFailure("denominator vanishes".into()));
    }
    let get = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or_default();
    let mut q: Vec<Complex64> = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut s = get(a, k);
        for i in 1..=k {
            s -= get(b, i) * q[k - i];
        }
        q.push(s / b[0]);
    }
    Ok(q)
}

fn horner(p: &[Complex64], x: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

/// Roots of a polynomial in ascending powers (trailing near-zeros dropped).
fn poly_roots(p: &[Complex64]) -> Vec<Complex64> {
    let scale = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let deg = match p.iter().rposition(|c| c.norm() > 1e-14 * scale) {
        Some(d) => d,
        None => return Vec::new(),
    };
    if deg == 0 {
        return Vec::new();
    }
    let lead = p[deg];
    let comp = DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -p[i] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    eigenvalues(&comp)
}

impl<'a> SampledFunction<'a> {
    /// `taylor(x, t, k)` returns the coefficients `f^(j)(x) / j!` for `j <= k`.
    pub fn from_taylor(
        taylor: impl Fn(Complex64, &ParamPoint, usize) -> Result<Vec<Complex64>> + Send + Sync + 'a,
    ) -> Self {
        SampledFunction {
            taylor: Arc::new(taylor),
            region: Arc::new(|_| Annulus::default()),
            admissible: Arc::new(|_, _| true),
        }
    }

    /// A truncated series `sum_j c_j(t) (x - center)^j`, taken as the
    /// polynomial it spells.
    pub fn series(
        center: Complex64,
        coeffs: impl Fn(&ParamPoint) -> Vec<Complex64> + Send + Sync + 'a,
    ) -> Self {
        Self::from_taylor(move |x, t, k| Ok(shift_poly(&coeffs(t), x - center, k)))
    }

    /// A polynomial in `x` independent of `t`.
    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        Self::series(Complex64::new(0.0, 0.0), move |_| coeffs.clone())
    }

    /// `sum_i num_i(t) x^i / sum_i den_i(t) x^i`. Samples keep a distance
    /// `margin` from the zeros of the denominator.
    pub fn rational(num: Vec<ParamRational>, den: Vec<ParamRational>, margin: f64) -> Self {
        let num = Arc::new(num);
        let den = Arc::new(den);
        let eval_all = |v: &[ParamRational], t: &ParamPoint| -> Result<Vec<Complex64>> {
            v.iter().map(|r| r.eval(t)).collect()
        };
        let (n2, d2) = (num.clone(), den.clone());
        let mut f = Self::from_taylor(move |x, t, k| {
            let a = shift_poly(&eval_all(&n2, t)?, x, k);
            let b = shift_poly(&eval_all(&d2, t)?, x, k);
            series_div(&a, &b, k)
        });
        f.admissible = Arc::new(move |x, t| match eval_all(&den, t) {
            Ok(d) => poly_roots(&d).iter().all(|r| (x - r).norm() >= margin),
            Err(_) => false,
        });
        f
    }

    /// Values only; Taylor coefficients come from the trapezoidal Cauchy
    /// integral on a circle of `radius` around `x`. Values are assumed
    /// accurate to `noise * max(1, |f|)`; coefficients below that level are
    /// set to zero.
    pub fn from_values(
        f: impl Fn(Complex64, &ParamPoint) -> Result<Complex64> + Send + Sync + 'a,
        radius: f64,
        noise: f64,
    ) -> Self {
        Self::from_taylor(move |x, t, k| {
            let m = 2 * k + 24;
            let w: Vec<Complex64> = (0..m)
                .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / m as f64))
                .collect();
            let vals: Vec<Complex64> = w
                .par_iter()
                .map(|wj| f(x + wj * radius, t))
                .collect::<Result<_>>()?;
            let big = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let floor = 10.0 * noise.max(f64::EPSILON) * big.max(1.0);
            Ok((0..=k)
                .map(|p| {
                    let s: Complex64 = vals
                        .iter()
                        .zip(&w)
                        .map(|(v, wj)| v * wj.powi(-(p as i32)))
                        .sum::<Complex64>()
                        / m as f64;
                    if s.norm() <= floor {
                        Complex64::new(0.0, 0.0)
                    } else {
                        s / radius.powi(p as i32)
                    }
                })
                .collect())
        })
    }

    pub fn with_region(mut self, region: impl Fn(&ParamPoint) -> Annulus + Send + Sync + 'a) -> Self {
        self.region = Arc::new(region);
        self
    }

    /// Further restrict where samples may be drawn.
    pub fn restricted(mut self, ok: impl Fn(Complex64, &ParamPoint) -> bool + Send + Sync + 'a) -> Self {
        let prev = self.admissible.clone();
        self.admissible = Arc::new(move |x, t| prev(x, t) && ok(x, t));
        self
    }

    /// `f^(j)(x) / j!` for `j <= order`.
    pub fn taylor(&self, x: Complex64, t: &ParamPoint, order: usize) -> Result<Vec<Complex64>> {
        let v = (self.taylor)(x, t, order)?;
        if v.len() <= order || v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::EvaluationFailure(format!(
                "no finite Taylor data of order {order} at x = {x}"
            )));
        }
        Ok(v)
    }

    pub fn value(&self, x: Complex64, t: &ParamPoint) -> Result<Complex64> {
        Ok(self.taylor(x, t, 0)?[0])
    }

    /// Largest relative gap between the reported first derivative and a
    /// central difference of the values.
    pub fn derivative_mismatch(&self, x: Complex64, t: &ParamPoint, h: f64) -> Result<f64> {
        let d = self.taylor(x, t, 1)?[1];
        let hc = Complex64::new(h, 0.0);
        let fd = (self.value(x + hc, t)? - self.value(x - hc, t)?) / (2.0 * h);
        Ok((d - fd).norm() / d.norm().max(1.0))
    }

    fn draw(&self, t: &ParamPoint, rng: &mut impl Rng) -> Result<Complex64> {
        let region = (self.region)(t);
        for _ in 0..500 {
            let x = region.draw(rng);
            if (self.admissible)(x, t) {
                return Ok(x);
            }
        }
        Err(Error::EvaluationFailure("no admissible sample point in the region".into()))
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Wronskian `det [f_j^(i)(x)]`.
pub fn wronskian(functions: &[SampledFunction<'_>], x: Complex64, t: &ParamPoint) -> Result<Complex64> {
    let k = functions.len();
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let cols = functions
        .iter()
        .map(|f| f.taylor(x, t, k - 1))
        .collect::<Result<Vec<_>>>()?;
    let w = DMatrix::from_fn(k, k, |i, j| cols[j][i] * factorial(i));
    Ok(w.determinant())
}

/// Taylor coefficients (rows) of `x^m f, ..., f, x^m, ..., 1` at `x`.
fn taylor_matrix(fc: &[Complex64], x: Complex64, m: usize) -> DMatrix<Complex64> {
    let k = 2 * m + 2;
    let mut out = DMatrix::zeros(k, k);
    for (col, j) in (0..=m).rev().enumerate() {
        // (x + h)^j
        let mut xj = vec![Complex64::new(0.0, 0.0); j + 1];
        xj[j] = Complex64::new(1.0, 0.0);
        let pj = shift_poly(&xj, x, k - 1);
        for r in 0..k {
            out[(r, col + m + 1)] = pj[r];
            out[(r, col)] = (0..=r).map(|i| pj[i] * fc[r - i]).sum();
        }
    }
    out
}

/// Numerical rank defect of the Taylor matrix: rows are weighted by
/// `rho^r` (coefficients on a disc of radius `rho`), columns normalized, and
/// the result is `sigma_min / sigma_max`.
fn wronskian_defect(t: &DMatrix<Complex64>, rho: f64) -> f64 {
    let mut a = t.clone();
    for r in 0..a.nrows() {
        a.row_mut(r).scale_mut(rho.powi(r as i32));
    }
    for j in 0..a.ncols() {
        let n = a.column(j).norm();
        if n == 0.0 {
            return 0.0;
        }
        a.column_mut(j).unscale_mut(n);
    }
    let sv = a.singular_values();
    sv.min() / sv.max()
}

/// Settings for [`detect_rational_in_x`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectOptions {
    pub m_max: usize,
    pub seed: u64,
    /// Wronskian evaluations per grid point and degree.
    pub wronskian_samples: usize,
    pub verify_samples: usize,
    pub tol: f64,
    pub redraws: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            m_max: 8,
            seed: 0,
            wronskian_samples: 3,
            verify_samples: 10,
            tol: 1e-8,
            redraws: 3,
        }
    }
}

/// `num(x) / den(x)` at one grid point, ascending powers, with the leading
/// nonzero denominator coefficient equal to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fraction {
    pub num: Vec<Complex64>,
    pub den: Vec<Complex64>,
    /// Largest relative error over the verification samples.
    pub residual: f64,
}

impl Fraction {
    pub fn eval(&self, x: Complex64) -> Complex64 {
        horner(&self.num, x) / horner(&self.den, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum RationalVerdict {
    Rational { m: usize, coefficients: Vec<Fraction> },
    NotRationalUpTo { m_max: usize },
}

impl RationalVerdict {
    pub fn degree(&self) -> Option<usize> {
        match self {
            RationalVerdict::Rational { m, .. } => Some(*m),
            RationalVerdict::NotRationalUpTo { .. } => None,
        }
    }
}

fn stream_rng(seed: u64, grid: usize, m: usize, attempt: usize, phase: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((grid as u64) << 24) ^ ((m as u64) << 12) ^ ((attempt as u64) << 4) ^ phase);
    rng
}

/// Does the Wronskian of degree `m` vanish at every sample of this point?
fn wronskian_vanishes(
    f: &SampledFunction<'_>,
    t: &ParamPoint,
    m: usize,
    opts: &DetectOptions,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    for _ in 0..opts.wronskian_samples {
        let x = f.draw(t, rng)?;
        let fc = f.taylor(x, t, 2 * m + 1)?;
        let rho = 2.0 * (f.region)(t).outer;
        if wronskian_defect(&taylor_matrix(&fc, x, m), rho) > opts.tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fit `num / den` of degree `m` at one point; `None` if verification fails.
fn fit_fraction(
    f: &SampledFunction<'_>,
    t: &ParamPoint,
    m: usize,
    opts: &DetectOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Fraction>> {
    let k = 2 * m + 2;
    let rows = 2 * k;
    let mut a = DMatrix::<Complex64>::zeros(rows, k);
    for r in 0..rows {
        let x = f.draw(t, rng)?;
        let fx = f.value(x, t)?;
        let mut p = Complex64::new(1.0, 0.0);
        for j in 0..=m {
            a[(r, j)] = p;
            a[(r, m + 1 + j)] = -fx * p;
            p *= x;
        }
        let nr = a.row(r).norm();
        a.row_mut(r).unscale_mut(nr);
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested V^H");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty");
    let v: Vec<Complex64> = vt.row(imin).iter().map(|z| z.conj()).collect();
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = match (0..=m).rev().find(|&i| v[m + 1 + i].norm() > 1e-8 * vmax) {
        Some(i) => v[m + 1 + i],
        None => return Ok(None),
    };
    let frac = Fraction {
        num: v[..=m].iter().map(|z| z / lead).collect(),
        den: v[m + 1..].iter().map(|z| z / lead).collect(),
        residual: 0.0,
    };
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut tries = 0;
    while checked < opts.verify_samples {
        tries += 1;
        if tries > 50 * opts.verify_samples {
            return Ok(None);
        }
        let x = f.draw(t, rng)?;
        // stay away from zeros of the fitted denominator
        let size: f64 = frac
            .den
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm() * x.norm().powi(i as i32))
            .sum();
        if horner(&frac.den, x).norm() < 1e-3 * size {
            continue;
        }
        let fx = f.value(x, t)?;
        worst = worst.max((frac.eval(x) - fx).norm() / fx.norm().max(1.0));
        checked += 1;
    }
    Ok((worst <= opts.tol).then_some(Fraction {
        residual: worst,
        ..frac
    }))
}

/// Smallest `m <= m_max` such that `f(., t)` is a ratio of polynomials of
/// degree at most `m` at every grid point, with the fitted coefficients.
pub fn detect_rational_in_x(
    f: &SampledFunction<'_>,
    grid: &[ParamPoint],
    opts: &DetectOptions,
) -> Result<RationalVerdict> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty parameter grid".into()));
    }
    let at = |g: usize| move |e: Error| Error::AtGridPoint {
        index: g,
        source: Box::new(e),
    };
    for m in 0..=opts.m_max {
        for attempt in 0..opts.redraws.max(1) {
            let vanish = grid
                .par_iter()
                .enumerate()
                .map(|(g, t)| {
                    let mut rng = stream_rng(opts.seed, g, m, attempt, 0);
                    wronskian_vanishes(f, t, m, opts, &mut rng).map_err(at(g))
                })
                .collect::<Result<Vec<bool>>>()?;
            if !vanish.iter().all(|&v| v) {
                break;
            }
            let fits = grid
                .par_iter()
                .enumerate()
                .map(|(g, t)| {
                    let mut rng = stream_rng(opts.seed, g, m, attempt, 1);
                    fit_fraction(f, t, m, opts, &mut rng).map_err(at(g))
                })
                .collect::<Result<Vec<_>>>()?;
            if fits.iter().all(Option::is_some) {
                return Ok(RationalVerdict::Rational {
                    m,
                    coefficients: fits.into_iter().flatten().collect(),
                });
            }
            if attempt + 1 == opts.redraws.max(1) {
                return Err(Error::InconsistentSamples { m });
            }
        }
    }
    Ok(RationalVerdict::NotRationalUpTo { m_max: opts.m_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::param::Poly;

    fn grid() -> Vec<ParamPoint> {
        [0.1, 0.3, 0.5].iter().map(|&t| ParamPoint::real(&[t])).collect()
    }

    #[test]
    fn wronskians_of_monomials() {
        let one = SampledFunction::polynomial(vec![c(1.0, 0.0)]);
        let x = SampledFunction::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let x2 = SampledFunction::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let p = ParamPoint::real(&[0.0]);
        let at = c(0.7, -0.2);
        assert!((wronskian(&[one.clone(), x.clone()], at, &p).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        assert!((wronskian(&[one, x, x2], at, &p).unwrap() - c(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn swapping_functions_flips_the_sign() {
        let a = SampledFunction::polynomial(vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)]);
        let b = SampledFunction::rational(
            vec![ParamRational::real(1.0)],
            vec![ParamRational::real(-2.0), ParamRational::real(1.0)],
            0.1,
        );
        let p = ParamPoint::real(&[0.0]);
        let x = c(0.4, 0.3);
        let w1 = wronskian(&[a.clone(), b.clone()], x, &p).unwrap();
        let w2 = wronskian(&[b, a], x, &p).unwrap();
        assert!((w1 + w2).norm() < 1e-13 * w1.norm());
    }

    #[test]
    fn constant_is_degree_zero() {
        let f = SampledFunction::polynomial(vec![c(1.0, 0.0)]);
        let v = detect_rational_in_x(&f, &grid(), &DetectOptions::default()).unwrap();
        match v {
            RationalVerdict::Rational { m, coefficients } => {
                assert_eq!(m, 0);
                for fr in coefficients {
                    assert!((fr.num[0] - c(1.0, 0.0)).norm() < 1e-10);
                    assert!((fr.den[0] - c(1.0, 0.0)).norm() < 1e-10);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mobius_in_x() {
        // (t x + 1) / (x - t)
        let tvar = ParamRational::from_poly(Poly::var(0));
        let f = SampledFunction::rational(
            vec![ParamRational::real(1.0), tvar.clone()],
            vec![-&tvar, ParamRational::real(1.0)],
            0.05,
        );
        let v = detect_rational_in_x(&f, &grid(), &DetectOptions::default()).unwrap();
        let RationalVerdict::Rational { m, coefficients } = v else {
            panic!("not detected")
        };
        assert_eq!(m, 1);
        for (fr, t) in coefficients.iter().zip(grid()) {
            let t = t.coords()[0];
            assert!((fr.den[1] - c(1.0, 0.0)).norm() < 1e-12);
            assert!((fr.den[0] + t).norm() < 1e-9);
            assert!((fr.num[0] - c(1.0, 0.0)).norm() < 1e-9);
            assert!((fr.num[1] - t).norm() < 1e-9);
        }
    }

    #[test]
    fn truncated_exponential_is_not_low_degree() {
        let coeffs: Vec<Complex64> = (0..20).map(|k| c(1.0 / factorial(k), 0.0)).collect();
        let f = SampledFunction::polynomial(coeffs);
        let opts = DetectOptions {
            m_max: 5,
            ..Default::default()
        };
        assert_eq!(
            detect_rational_in_x(&f, &grid(), &opts).unwrap(),
            RationalVerdict::NotRationalUpTo { m_max: 5 }
        );
    }

    #[test]
    fn cauchy_coefficients_match_closed_form() {
        let exact = SampledFunction::rational(
            vec![ParamRational::real(1.0), ParamRational::real(2.0)],
            vec![ParamRational::real(3.0), ParamRational::real(1.0)],
            0.1,
        );
        let e2 = exact.clone();
        let approx = SampledFunction::from_values(move |x, t| e2.value(x, t), 0.2, 1e-15);
        let p = ParamPoint::real(&[0.0]);
        let x = c(0.5, 0.5);
        let a = exact.taylor(x, &p, 6).unwrap();
        let b = approx.taylor(x, &p, 6).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-11, "{u} {v}");
        }
        assert!(exact.derivative_mismatch(x, &p, 1e-5).unwrap() < 1e-8);
    }

    #[test]
    fn detection_is_deterministic() {
        let tvar = ParamRational::from_poly(Poly::var(0));
        let f = SampledFunction::rational(
            vec![ParamRational::real(1.0), ParamRational::real(0.0), tvar.clone()],
            vec![ParamRational::real(2.0), tvar],
            0.05,
        );
        let opts = DetectOptions {
            seed: 11,
            ..Default::default()
        };
        let a = detect_rational_in_x(&f, &grid(), &opts).unwrap();
        let b = detect_rational_in_x(&f, &grid(), &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.degree(), Some(2));
    }

    #[test]
    fn roots_and_shifts() {
        let p = vec![c(2.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0)];
        let mut r: Vec<f64> = poly_roots(&p).iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
        // p(1 + h) = -h + h^2
        let s = shift_poly(&p, c(1.0, 0.0), 4);
        assert_eq!(s, vec![c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }
}
