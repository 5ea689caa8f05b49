//! Gauge transformations `B = P' P^-1 + P A P^-1`.

use crate::error::{Error, Result};
use crate::param::{Mat, ParamMatrix, ParamPoint, ParamRational};
use crate::series::ParamSeries;
use crate::{CMatrix, Complex64};

use super::expand::{reexpand, At};
use super::{LinearSystem, Pole};

/// A gauge matrix `P`, stored as a Laurent series in `x - c`.
///
/// An exact series is a Laurent polynomial and describes a global gauge
/// rational in `x`; a truncated one is only meaningful near its center.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTransform {
    p: ParamSeries,
}

impl GaugeTransform {
    pub fn new(p: ParamSeries) -> Result<Self> {
        if p.valuation().is_none() {
            return Err(Error::SingularGauge);
        }
        Ok(GaugeTransform { p })
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(Mat::identity(n))
    }

    /// An `x`-independent gauge.
    pub fn constant(m: ParamMatrix) -> Self {
        GaugeTransform {
            p: ParamSeries::constant(ParamRational::zero(), m),
        }
    }

    pub fn series(&self) -> &ParamSeries {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }

    pub fn center(&self) -> &ParamRational {
        self.p.center()
    }

    /// Global (Laurent polynomial in `x - c`) rather than a truncated local series.
    pub fn is_global(&self) -> bool {
        self.p.is_exact()
    }

    pub fn is_constant(&self) -> bool {
        self.p.is_exact()
            && (self.p.low_order()..=self.p.truncation())
                .all(|k| k == 0 || self.p.coeff(k).is_none_or(Mat::is_zero))
    }

    pub fn eval(&self, x: Complex64, t: &ParamPoint) -> Result<CMatrix> {
        self.p.eval(x, t)
    }

    pub fn eval_derivative(&self, x: Complex64, t: &ParamPoint) -> Result<CMatrix> {
        self.p.derivative().eval(x, t)
    }

    /// `P^-1`. Exact when `det P` is a monomial in `x - c`.
    pub fn inverse(&self, t: &ParamPoint) -> Result<Self> {
        let inv = self.p.invert(t).map_err(singular_gauge)?;
        Ok(GaugeTransform { p: inv })
    }

    /// `self * inner` (apply `inner` first, then `self`).
    pub fn compose(&self, inner: &GaugeTransform) -> Result<Self> {
        let (a, b) = if self.is_constant() {
            (self.recentered(inner.center())?, inner.p.clone())
        } else {
            (self.p.clone(), inner.recentered(self.center())?)
        };
        Ok(GaugeTransform { p: a.mul(&b)? })
    }

    fn recentered(&self, center: &ParamRational) -> Result<ParamSeries> {
        if self.is_constant() {
            return Ok(ParamSeries::constant(
                center.clone(),
                self.p.coeff_or_zero(0),
            ));
        }
        if self.p.center() == center {
            return Ok(self.p.clone());
        }
        Err(Error::CenterMismatch)
    }

    /// Expansion of `P` at `at` through `order`.
    pub(crate) fn expand(
        &self,
        at: &At<ParamRational>,
        same: bool,
        order: i64,
    ) -> Result<ParamSeries> {
        if self.is_constant() {
            let center = match at {
                At::Finite(a) => a.clone(),
                At::Infinity => ParamRational::zero(),
            };
            return Ok(ParamSeries::constant(center, self.p.coeff_or_zero(0)).padded(order));
        }
        if same {
            return Ok(self.p.padded(order));
        }
        if !self.p.is_exact() {
            return Err(Error::InvalidInput(
                "a truncated local gauge cannot be re-expanded away from its center".into(),
            ));
        }
        reexpand(&self.p, at, false, order)
    }
}

fn singular_gauge(e: Error) -> Error {
    match e {
        Error::SingularLeadingCoefficient | Error::SingularMatrix => Error::SingularGauge,
        other => other,
    }
}

/// `dP/dx P^-1 + P A P^-1` for a series `A` in the `d/dx` normalization.
pub fn apply_gauge(a: &ParamSeries, p: &GaugeTransform, t: &ParamPoint) -> Result<ParamSeries> {
    transform_series(a, p, t, false)
}

/// `delta(P) P^-1 + P A P^-1` for `A` in the `delta = (x - c) d/dx` normalization.
pub fn apply_gauge_delta(
    a: &ParamSeries,
    p: &GaugeTransform,
    t: &ParamPoint,
) -> Result<ParamSeries> {
    transform_series(a, p, t, true)
}

fn transform_series(
    a: &ParamSeries,
    p: &GaugeTransform,
    t: &ParamPoint,
    delta: bool,
) -> Result<ParamSeries> {
    if a.n() != p.n() {
        return Err(Error::CenterMismatch);
    }
    let same = p.center() == a.center();
    let span = a.truncation() - a.low_order();
    let ps = p.expand(
        &At::Finite(a.center().clone()),
        same,
        a.truncation() + span + 2,
    )?;
    let pinv = ps.invert(t).map_err(singular_gauge)?;
    let dp = if delta { ps.delta() } else { ps.derivative() };
    dp.mul(&pinv)?.add(&ps.mul(a)?.mul(&pinv)?)
}

impl LinearSystem {
    /// Transform the whole system by a global gauge.
    ///
    /// `P` must be a Laurent polynomial in `x - c` whose inverse is again a
    /// Laurent polynomial (its determinant is a monomial); then the result
    /// has poles only at the old poles and at `c`.
    pub fn apply_gauge(&self, p: &GaugeTransform, t: &ParamPoint) -> Result<LinearSystem> {
        if p.n() != self.n() {
            return Err(Error::InvalidInput(
                "gauge and system dimensions differ".into(),
            ));
        }
        if !p.is_global() {
            return Err(Error::InvalidInput(
                "a system-level gauge must be a Laurent polynomial".into(),
            ));
        }
        let inv = p.inverse(t)?;
        if !inv.is_global() {
            return Err(Error::InvalidInput(
                "gauge inverse is not a Laurent polynomial; the result would gain new poles".into(),
            ));
        }
        let dp = GaugeTransform {
            p: p.series().derivative(),
        };
        let c = p.center().clone();
        let own_c = if p.is_constant() {
            None
        } else {
            self.pole_index_at(&c)
        };

        let mut poles = Vec::new();
        for (i, pole) in self.poles().iter().enumerate() {
            if Some(i) == own_c {
                continue;
            }
            let at = At::Finite(pole.alpha.clone());
            let b = self.gauged_expansion(p, &inv, &dp, &at, Some(i), false, -1)?;
            if let Some(pp) = principal_part(&b, pole.alpha.clone()) {
                poles.push(pp);
            }
        }
        if !p.is_constant() {
            let b = self.gauged_expansion(p, &inv, &dp, &At::Finite(c.clone()), own_c, true, -1)?;
            if let Some(pp) = principal_part(&b, c) {
                poles.push(pp);
            }
        }
        let b = self.gauged_expansion(p, &inv, &dp, &At::Infinity, None, false, 0)?;
        // coefficient of w^-d is the x^d coefficient
        let mut tail: Vec<ParamMatrix> = (0..=(-b.low_order()).max(0))
            .map(|d| b.coeff_or_zero(-d))
            .collect();
        while tail.last().is_some_and(Mat::is_zero) {
            tail.pop();
        }
        LinearSystem::new(self.n(), self.nparams(), poles, tail)
    }

    /// Expansion of the transformed matrix at `at`, known at least through `need`.
    #[allow(clippy::too_many_arguments)]
    fn gauged_expansion(
        &self,
        p: &GaugeTransform,
        inv: &GaugeTransform,
        dp: &GaugeTransform,
        at: &At<ParamRational>,
        own: Option<usize>,
        same: bool,
        need: i64,
    ) -> Result<ParamSeries> {
        let mut order = need + 2;
        for _ in 0..8 {
            let a = self.expand_symbolic(at, own, order)?;
            let ps = p.expand(at, same, order)?;
            let qs = inv.expand(at, same, order)?;
            let ds = dp.expand(at, same, order)?;
            let b = ds.mul(&qs)?.add(&ps.mul(&a)?.mul(&qs)?)?;
            if b.is_exact() || b.truncation() >= need {
                return Ok(b);
            }
            order += (need - b.truncation()).max(2);
        }
        Err(Error::InvalidInput(
            "gauge expansion does not reach the required order".into(),
        ))
    }
}

fn principal_part(b: &ParamSeries, alpha: ParamRational) -> Option<Pole> {
    let principal: Vec<ParamMatrix> = (b.low_order()..0).map(|k| b.coeff_or_zero(k)).collect();
    let first = principal.iter().position(|m| !m.is_zero())?;
    Some(Pole {
        alpha,
        principal: principal[first..].to_vec(),
    })
}

/// Largest Frobenius residual `|B - P' P^-1 - P A P^-1|` over `samples`.
pub fn verify_gauge(
    a: &LinearSystem,
    b: &LinearSystem,
    p: &GaugeTransform,
    samples: &[(Complex64, ParamPoint)],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (x, t) in samples {
        let am = a.eval(*x, t)?;
        let bm = b.eval(*x, t)?;
        worst = worst.max(residual(&am, &bm, p, *x, t)?);
    }
    Ok(worst)
}

/// Same check for truncated local series; meaningful inside the radius
/// of convergence and up to the truncation error.
pub fn verify_gauge_local(
    a: &ParamSeries,
    b: &ParamSeries,
    p: &GaugeTransform,
    samples: &[(Complex64, ParamPoint)],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (x, t) in samples {
        let am = a.eval(*x, t)?;
        let bm = b.eval(*x, t)?;
        worst = worst.max(residual(&am, &bm, p, *x, t)?);
    }
    Ok(worst)
}

fn residual(
    am: &CMatrix,
    bm: &CMatrix,
    p: &GaugeTransform,
    x: Complex64,
    t: &ParamPoint,
) -> Result<f64> {
    let pm = p.eval(x, t)?;
    let dpm = p.eval_derivative(x, t)?;
    let pinv = pm.clone().try_inverse().ok_or(Error::SingularGauge)?;
    Ok((bm - dpm * &pinv - pm * am * pinv).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::worked_example;

    fn tp(v: f64) -> ParamPoint {
        ParamPoint::real(&[v])
    }

    #[test]
    fn worked_example_gauge_identity() {
        let (a, b, p) = worked_example();
        let samples: Vec<_> = [(2.0, 0.0), (0.7, 0.2), (-1.0, -0.4)]
            .iter()
            .map(|&(x, t)| (Complex64::new(x, 0.1), tp(t)))
            .collect();
        assert!(verify_gauge(&a, &b, &p, &samples).unwrap() < 1e-12);
        let id = GaugeTransform::identity(2);
        let r = verify_gauge(&a, &b, &id, &[(Complex64::new(2.0, 0.0), tp(0.0))]).unwrap();
        assert!(r > 0.1);
    }

    #[test]
    fn inverse_of_worked_gauge_is_exact() {
        let (_, _, p) = worked_example();
        let q = p.inverse(&tp(0.3)).unwrap();
        assert!(q.is_global());
        // P^-1 = [[u, u^-2], [0, u^-1]]
        assert_eq!(q.series().valuation(), Some(-2));
        assert_eq!(q.series().coeff_or_zero(1).get(0, 0), &ParamRational::one());
        assert_eq!(
            q.series().coeff_or_zero(-2).get(0, 1),
            &ParamRational::one()
        );
        let x = Complex64::new(1.1, 0.4);
        let prod = p.eval(x, &tp(0.3)).unwrap() * q.eval(x, &tp(0.3)).unwrap();
        assert!((prod - CMatrix::identity(2, 2)).norm() < 1e-13);
    }

    #[test]
    fn system_level_gauge_reproduces_simple_form() {
        let (a, b, p) = worked_example();
        let got = a.apply_gauge(&p, &tp(0.1)).unwrap();
        assert_eq!(got.poles().len(), 1);
        assert_eq!(got.poles()[0].order(), 1);
        assert!(got.tail().is_empty());
        for &(x, t) in &[(2.0, 0.0), (0.3, -0.3), (-1.5, 0.45)] {
            let x = Complex64::new(x, 0.2);
            let d = got.eval(x, &tp(t)).unwrap() - b.eval(x, &tp(t)).unwrap();
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn series_gauge_matches_system_gauge() {
        let (a, b, p) = worked_example();
        let t = tp(0.25);
        let loc = a.localize(0, 4, &t).unwrap();
        let got = apply_gauge(&loc, &p, &t).unwrap();
        let want = b.localize(0, 4, &t).unwrap();
        for k in got.low_order()..=got.truncation().min(want.truncation()) {
            let d =
                got.coeff_or_zero(k).eval(&t).unwrap() - want.coeff_or_zero(k).eval(&t).unwrap();
            assert!(d.norm() < 1e-12, "order {k}");
        }
    }

    #[test]
    fn constant_gauge_conjugates() {
        let (a, _, _) = worked_example();
        let c = ParamMatrix::constant(&CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        ));
        let g = GaugeTransform::constant(c);
        let t = tp(0.1);
        let b = a.apply_gauge(&g, &t).unwrap();
        let x = Complex64::new(1.0, 1.0);
        let cm = g.eval(x, &t).unwrap();
        let want = &cm * a.eval(x, &t).unwrap() * cm.clone().try_inverse().unwrap();
        assert!((b.eval(x, &t).unwrap() - want).norm() < 1e-12);
    }
}
