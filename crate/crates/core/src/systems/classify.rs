//! Classification of a moving pole: simple, regular by a witness gauge, or
//! unresolved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::ParamPoint;
use crate::Complex64;

use super::gauge::{apply_gauge, verify_gauge, verify_gauge_local, GaugeTransform};
use super::LinearSystem;

/// Tolerance on the witness residual.
const WITNESS_TOL: f64 = 1e-8;
/// Truncation used when the witness is a local series.
const LOCAL_ORDER: i64 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// Pole of order one.
    Simple,
    /// The witness gauge maps the pole to a simple one.
    RegularByWitness,
    /// Higher order and no (working) witness; regularity is not decided.
    HigherOrderUnresolved,
}

/// Classify pole `index` at the parameter point `t`.
///
/// Only positive certificates are produced. A failing or missing witness
/// yields `HigherOrderUnresolved`, never "irregular".
pub fn classify_singularity(
    sys: &LinearSystem,
    index: usize,
    t: &ParamPoint,
    witness: Option<&GaugeTransform>,
) -> Result<Classification> {
    let pole = sys
        .poles()
        .get(index)
        .ok_or_else(|| Error::InvalidInput(format!("no pole with index {index}")))?;
    if pole.order() == 1 {
        return Ok(Classification::Simple);
    }
    let Some(w) = witness else {
        return Ok(Classification::HigherOrderUnresolved);
    };
    let ok = if w.is_global() {
        global_witness(sys, index, t, w)
    } else {
        local_witness(sys, index, t, w)
    };
    Ok(if ok.unwrap_or(false) {
        Classification::RegularByWitness
    } else {
        Classification::HigherOrderUnresolved
    })
}

/// Sample points on two circles around pole `index`, inside half the
/// distance to the nearest other pole.
fn ring_samples(
    sys: &LinearSystem,
    index: usize,
    t: &ParamPoint,
    max_radius: f64,
) -> Result<Vec<(Complex64, ParamPoint)>> {
    let locs = sys.check_collisions(t)?;
    let a = locs[index];
    let gap = locs
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .map(|(_, b)| (b - a).norm())
        .fold(f64::INFINITY, f64::min);
    let r = max_radius.min(0.5 * gap);
    let mut out = Vec::new();
    for rho in [0.5 * r, r] {
        for k in 0..8 {
            let th = std::f64::consts::TAU * (k as f64 + 0.25) / 8.0;
            out.push((a + Complex64::from_polar(rho, th), t.clone()));
        }
    }
    Ok(out)
}

fn global_witness(
    sys: &LinearSystem,
    index: usize,
    t: &ParamPoint,
    w: &GaugeTransform,
) -> Result<bool> {
    let alpha = &sys.poles()[index].alpha;
    let b = sys.apply_gauge(w, t)?;
    if let Some(j) = b.pole_index_at(alpha) {
        if b.poles()[j].order() > 1 {
            return Ok(false);
        }
    }
    let samples = ring_samples(sys, index, t, 1.0)?;
    Ok(verify_gauge(sys, &b, w, &samples)? <= WITNESS_TOL)
}

fn local_witness(
    sys: &LinearSystem,
    index: usize,
    t: &ParamPoint,
    w: &GaugeTransform,
) -> Result<bool> {
    let a = sys.localize(index, LOCAL_ORDER, t)?;
    let b = apply_gauge(&a, w, t)?;
    let scale = (b.low_order()..=b.truncation())
        .map(|k| b.coeff_or_zero(k).eval(t).map(|m| m.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0_f64, f64::max);
    for k in b.low_order()..-1 {
        if b.coeff_or_zero(k).eval(t)?.norm() > WITNESS_TOL * scale {
            return Ok(false);
        }
    }
    let radius = a
        .shift(index_shift(&a))
        .estimate_radius(t)
        .unwrap_or(1.0)
        .min(1.0);
    let samples = ring_samples(sys, index, t, 0.1 * radius)?;
    Ok(verify_gauge_local(&a, &b, w, &samples)? <= WITNESS_TOL)
}

/// Shift making the series start at order zero (for the radius estimate).
fn index_shift(a: &crate::series::ParamSeries) -> i64 {
    -a.low_order()
}

/// The deepest principal coefficient of pole `index` vanishes at `t`: the
/// structural pole order overstates the actual one there.
pub fn deepest_vanishes_at(sys: &LinearSystem, index: usize, t: &ParamPoint) -> Result<bool> {
    let pole = sys
        .poles()
        .get(index)
        .ok_or_else(|| Error::InvalidInput(format!("no pole with index {index}")))?;
    let deep = pole.principal[0].eval(t)?;
    let scale = pole
        .principal
        .iter()
        .map(|m| m.eval(t).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0_f64, f64::max);
    Ok(deep.norm() <= 1e-12 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::worked_example;
    use crate::param::{Mat, ParamRational};

    #[test]
    fn worked_example_classes() {
        let (a, b, p) = worked_example();
        let t = ParamPoint::real(&[0.2]);
        assert_eq!(
            classify_singularity(&b, 0, &t, None).unwrap(),
            Classification::Simple
        );
        assert_eq!(
            classify_singularity(&a, 0, &t, Some(&p)).unwrap(),
            Classification::RegularByWitness
        );
        assert_eq!(
            classify_singularity(&a, 0, &t, None).unwrap(),
            Classification::HigherOrderUnresolved
        );
    }

    #[test]
    fn double_pole_identity_is_unresolved() {
        let sys = LinearSystem::new(
            1,
            1,
            vec![super::super::Pole {
                alpha: ParamRational::zero(),
                principal: vec![Mat::identity(1), Mat::zeros(1)],
            }],
            vec![],
        )
        .unwrap();
        let t = ParamPoint::real(&[0.0]);
        assert_eq!(
            classify_singularity(&sys, 0, &t, None).unwrap(),
            Classification::HigherOrderUnresolved
        );
        // a wrong witness does not certify anything
        let w = GaugeTransform::identity(1);
        assert_eq!(
            classify_singularity(&sys, 0, &t, Some(&w)).unwrap(),
            Classification::HigherOrderUnresolved
        );
    }

    #[test]
    fn vanishing_deepest_coefficient_is_flagged() {
        let (a, _, _) = worked_example();
        assert!(!deepest_vanishes_at(&a, 0, &ParamPoint::real(&[0.3])).unwrap());
        let t = ParamRational::var(0);
        let sys =
            LinearSystem::fuchsian(1, vec![ParamRational::one()], vec![Mat::scalar(1, t)]).unwrap();
        assert!(deepest_vanishes_at(&sys, 0, &ParamPoint::real(&[0.0])).unwrap());
    }
}
