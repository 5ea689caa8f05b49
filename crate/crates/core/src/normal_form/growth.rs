//! Numerical moderate-growth probe on a sector at a singular point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::param::ParamPoint;
use crate::{CMatrix, Complex64};

/// Step of the central differences in `t`.
pub const T_STEP: f64 = 1e-5;
const RAYS: usize = 9;
const SAMPLES: usize = 12;
const FIRST_RADIUS: f64 = 0.1;
/// Growth rates may drift by this much (log factors); more is super-polynomial.
const DRIFT: f64 = 3.0;

/// Sector `{alpha + r e^{i phi} : |phi - bisector| < opening / 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sector {
    pub bisector: f64,
    pub opening: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum GrowthVerdict {
    /// `|u|^n |d^m Y| -> 0`; `exponent` is the fitted slope of
    /// `log |d^m Y|` against `log |u|`.
    Pass {
        n: u32,
        exponent: f64,
    },
    Fail {
        angle: f64,
        reason: String,
    },
}

/// Central difference of `y` in `t` with multi-index `orders`.
fn t_derivative<F>(y: &F, x: Complex64, t: &ParamPoint, orders: &[u32]) -> Result<CMatrix>
where
    F: Fn(Complex64, &ParamPoint) -> Result<CMatrix>,
{
    let Some(k) = orders.iter().position(|&m| m > 0) else {
        return y(x, t);
    };
    let mut rest = orders.to_vec();
    rest[k] -= 1;
    let h = Complex64::new(T_STEP, 0.0);
    let plus = t_derivative(y, x, &t.shifted(k, h * 0.5), &rest)?;
    let minus = t_derivative(y, x, &t.shifted(k, -h * 0.5), &rest)?;
    Ok((plus - minus) / h)
}

/// Samples `|d^m Y / dt^m|` along rays of `sector` at radii `0.1 * 2^-j`,
/// `j = 0..12`, and decides whether the growth is polynomial.
pub fn moderate_growth_check<F>(
    y: F,
    alpha: Complex64,
    t: &ParamPoint,
    sector: Sector,
    m_orders: &[u32],
) -> Result<GrowthVerdict>
where
    F: Fn(Complex64, &ParamPoint) -> Result<CMatrix>,
{
    if !(sector.opening > 0.0 && sector.opening < std::f64::consts::TAU) {
        return Err(Error::InvalidInput(
            "sector opening must lie in (0, 2 pi)".into(),
        ));
    }
    if m_orders.len() > t.dim() {
        return Err(Error::InvalidInput(
            "more derivative orders than parameters".into(),
        ));
    }
    let mut orders = m_orders.to_vec();
    orders.resize(t.dim(), 0);
    let mut worst = f64::NEG_INFINITY;
    for r in 0..RAYS {
        let s = -0.95 + 1.9 * r as f64 / (RAYS - 1) as f64;
        let phi = sector.bisector + 0.5 * sector.opening * s;
        let mut logs = Vec::with_capacity(SAMPLES);
        for j in 0..SAMPLES {
            let rho = FIRST_RADIUS * 0.5_f64.powi(j as i32);
            let x = alpha + Complex64::from_polar(rho, phi);
            let v = t_derivative(&y, x, t, &orders)
                .map_err(|e| Error::EvaluationFailure(format!("at x = {x}: {e}")))?
                .norm();
            if !v.is_finite() {
                return Ok(GrowthVerdict::Fail {
                    angle: phi,
                    reason: format!("overflow at |u| = {rho:.3e}"),
                });
            }
            if v < 1e-280 {
                // decays faster than we can resolve: no growth on this ray
                break;
            }
            logs.push(v.ln());
        }
        if logs.len() < 3 {
            continue;
        }
        let rates: Vec<f64> = logs
            .windows(2)
            .map(|w| (w[1] - w[0]) / std::f64::consts::LN_2)
            .collect();
        let first = rates[0];
        let last = *rates.last().expect("nonempty");
        if last - first > DRIFT {
            return Ok(GrowthVerdict::Fail {
                angle: phi,
                reason: format!("growth rate rose from {first:.3} to {last:.3}"),
            });
        }
        let tail = &rates[rates.len().saturating_sub(4)..];
        worst = worst.max(tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    let n = if worst <= 1e-6 {
        0
    } else {
        (worst + 1e-6).floor() as u32 + 1
    };
    Ok(GrowthVerdict::Pass {
        n,
        exponent: if worst.is_finite() { -worst } else { 0.0 },
    })
}
