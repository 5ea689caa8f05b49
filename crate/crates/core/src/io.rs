//! JSON wire formats. Complex numbers are `[re, im]` pairs everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::{Mat, ParamMatrix, ParamPoint, ParamRational, Poly};
use crate::series::{NumericSeries, ParamSeries};
use crate::systems::{GaugeTransform, LinearSystem, Pole};
use crate::{CMatrix, Complex64};

/// A complex number, read from `[re, im]` or a bare real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexJson {
    Pair([f64; 2]),
    Real(f64),
}

impl ComplexJson {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexJson::Pair([re, im]) => Complex64::new(re, im),
            ComplexJson::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

pub fn complex_out(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exponents: Vec<u32>,
    pub coeff: ComplexJson,
}

/// A rational function: `{num, den}` term lists, or a constant shorthand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalJson {
    Full {
        num: Vec<TermJson>,
        #[serde(default)]
        den: Option<Vec<TermJson>>,
    },
    Constant(ComplexJson),
}

fn poly_in(terms: &[TermJson]) -> Poly {
    Poly::from_terms(terms.iter().map(|t| (t.exponents.clone(), t.coeff.value())))
}

fn poly_out(p: &Poly) -> Vec<TermJson> {
    p.terms()
        .map(|(e, c)| TermJson {
            exponents: e.clone(),
            coeff: ComplexJson::Pair(complex_out(*c)),
        })
        .collect()
}

impl RationalJson {
    pub fn to_rational(&self) -> Result<ParamRational> {
        match self {
            RationalJson::Full { num, den } => {
                let den = match den {
                    Some(d) => poly_in(d),
                    None => Poly::constant(Complex64::new(1.0, 0.0)),
                };
                ParamRational::new(poly_in(num), den)
            }
            RationalJson::Constant(c) => Ok(ParamRational::constant(c.value())),
        }
    }

    pub fn from_rational(r: &ParamRational) -> Self {
        RationalJson::Full {
            num: poly_out(r.numerator()),
            den: Some(poly_out(r.denominator())),
        }
    }
}

/// Row-major matrix of rational functions.
pub type ParamMatrixJson = Vec<Vec<RationalJson>>;
/// Row-major numeric matrix.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn param_matrix_in(m: &ParamMatrixJson) -> Result<ParamMatrix> {
    let rows = m
        .iter()
        .map(|r| {
            r.iter()
                .map(RationalJson::to_rational)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Mat::from_rows(rows)
}

pub fn param_matrix_out(m: &ParamMatrix) -> ParamMatrixJson {
    m.rows()
        .map(|r| r.iter().map(RationalJson::from_rational).collect())
        .collect()
}

pub fn matrix_out(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| complex_out(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_in(m: &[Vec<ComplexJson>]) -> Result<CMatrix> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(
            "expected a nonempty square matrix".into(),
        ));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| m[i][j].value()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoleJson {
    pub alpha: RationalJson,
    pub principal: Vec<ParamMatrixJson>,
}

/// `{n, params, poles: [{alpha, principal}], tail}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemJson {
    pub n: usize,
    pub params: usize,
    #[serde(default)]
    pub poles: Vec<PoleJson>,
    #[serde(default)]
    pub tail: Vec<ParamMatrixJson>,
}

impl SystemJson {
    pub fn to_system(&self) -> Result<LinearSystem> {
        let poles = self
            .poles
            .iter()
            .map(|p| {
                Ok(Pole {
                    alpha: p.alpha.to_rational()?,
                    principal: p
                        .principal
                        .iter()
                        .map(param_matrix_in)
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = self
            .tail
            .iter()
            .map(param_matrix_in)
            .collect::<Result<Vec<_>>>()?;
        LinearSystem::new(self.n, self.params, poles, tail)
    }

    pub fn from_system(sys: &LinearSystem) -> Self {
        SystemJson {
            n: sys.n(),
            params: sys.nparams(),
            poles: sys
                .poles()
                .iter()
                .map(|p| PoleJson {
                    alpha: RationalJson::from_rational(&p.alpha),
                    principal: p.principal.iter().map(param_matrix_out).collect(),
                })
                .collect(),
            tail: sys.tail().iter().map(param_matrix_out).collect(),
        }
    }
}

/// `{center, lowOrder, truncation, coeffs}`; `exact` marks a Laurent polynomial.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesJson {
    pub center: RationalJson,
    pub low_order: i64,
    #[serde(default)]
    pub truncation: Option<i64>,
    pub coeffs: Vec<ParamMatrixJson>,
    #[serde(default)]
    pub exact: bool,
}

impl SeriesJson {
    pub fn to_series(&self) -> Result<ParamSeries> {
        let coeffs = self
            .coeffs
            .iter()
            .map(param_matrix_in)
            .collect::<Result<Vec<_>>>()?;
        if let Some(tr) = self.truncation {
            if tr != self.low_order + coeffs.len() as i64 - 1 {
                return Err(Error::InvalidInput(
                    "truncation does not match the coefficient count".into(),
                ));
            }
        }
        let center = self.center.to_rational()?;
        if self.exact {
            ParamSeries::exact(center, self.low_order, coeffs)
        } else {
            ParamSeries::new(center, self.low_order, coeffs)
        }
    }

    pub fn from_series(s: &ParamSeries) -> Self {
        SeriesJson {
            center: RationalJson::from_rational(s.center()),
            low_order: s.low_order(),
            truncation: Some(s.truncation()),
            coeffs: s.coeffs().iter().map(param_matrix_out).collect(),
            exact: s.is_exact(),
        }
    }
}

/// Numeric series at a fixed parameter point.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NumericSeriesJson {
    pub center: [f64; 2],
    pub low_order: i64,
    pub truncation: i64,
    pub coeffs: Vec<MatrixJson>,
}

impl NumericSeriesJson {
    pub fn from_series(s: &NumericSeries) -> Self {
        NumericSeriesJson {
            center: complex_out(*s.center()),
            low_order: s.low_order(),
            truncation: s.truncation(),
            coeffs: s.dense_coeffs().iter().map(matrix_out).collect(),
        }
    }
}

/// Gauge file: a series; Laurent polynomials (`exact`) act globally.
pub fn gauge_in(s: &SeriesJson) -> Result<GaugeTransform> {
    GaugeTransform::new(s.to_series()?)
}

/// One grid coordinate: explicit values or `{start, stop, count}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisJson {
    Linspace { start: f64, stop: f64, count: usize },
    Values(Vec<ComplexJson>),
}

impl AxisJson {
    pub fn values(&self) -> Result<Vec<Complex64>> {
        match self {
            AxisJson::Linspace { start, stop, count } => {
                if *count == 0 {
                    return Err(Error::InvalidInput("linspace needs count >= 1".into()));
                }
                Ok((0..*count)
                    .map(|k| {
                        let s = if *count == 1 {
                            0.0
                        } else {
                            k as f64 / (*count - 1) as f64
                        };
                        Complex64::new(start + s * (stop - start), 0.0)
                    })
                    .collect())
            }
            AxisJson::Values(v) => Ok(v.iter().map(|c| c.value()).collect()),
        }
    }
}

/// A parameter grid: an explicit list of points, or one axis per
/// coordinate (tensor product, last coordinate fastest).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridJson {
    Points(Vec<Vec<ComplexJson>>),
    Axes(Vec<AxisJson>),
}

impl GridJson {
    pub fn points(&self) -> Result<Vec<ParamPoint>> {
        let pts = match self {
            GridJson::Points(p) => p
                .iter()
                .map(|c| ParamPoint::new(c.iter().map(|z| z.value()).collect()))
                .collect::<Vec<_>>(),
            GridJson::Axes(axes) => {
                let mut pts = vec![Vec::new()];
                for a in axes {
                    let vals = a.values()?;
                    pts = pts
                        .into_iter()
                        .flat_map(|p: Vec<Complex64>| {
                            vals.iter().map(move |v| {
                                let mut q = p.clone();
                                q.push(*v);
                                q
                            })
                        })
                        .collect();
                }
                pts.into_iter().map(ParamPoint::new).collect()
            }
        };
        if pts.is_empty() {
            return Err(Error::InvalidInput("parameter grid is empty".into()));
        }
        let r = pts[0].dim();
        if r == 0 || pts.iter().any(|p| p.dim() != r) {
            return Err(Error::InvalidInput(
                "grid points must share a positive dimension".into(),
            ));
        }
        Ok(pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_round_trip() {
        let text = r#"{
            "n": 1, "params": 1,
            "poles": [{"alpha": {"num": [{"exponents": [1], "coeff": [1, 0]}]},
                       "principal": [[[0.5]]]}],
            "tail": []
        }"#;
        let js: SystemJson = serde_json::from_str(text).unwrap();
        let sys = js.to_system().unwrap();
        let again = SystemJson::from_system(&sys).to_system().unwrap();
        assert_eq!(sys, again);
        let t = ParamPoint::real(&[0.2]);
        let v = sys.eval(Complex64::new(1.2, 0.0), &t).unwrap();
        assert!((v[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn grids() {
        let g: GridJson = serde_json::from_str(r#"[{"start": 0, "stop": 1, "count": 3}]"#).unwrap();
        let p = g.points().unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[1], ParamPoint::real(&[0.5]));
        let g: GridJson = serde_json::from_str(r#"[[0.1], [[0.2, 1.0]]]"#).unwrap();
        let p = g.points().unwrap();
        assert_eq!(p[1].coords()[0], Complex64::new(0.2, 1.0));
        let g: GridJson = serde_json::from_str("[]").unwrap();
        assert!(g.points().is_err());
    }
}
