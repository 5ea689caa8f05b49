//! Analytic continuation of fundamental solutions along paths and the
//! parameterized monodromy matrices.

mod path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{complex_out, matrix_out, MatrixJson};
use crate::linalg::{exp_two_pi_i, max_abs};
use crate::param::{ParamMatrix, ParamPoint};
use crate::systems::{LinearSystem, NumericSystem};
use crate::{CMatrix, Complex64};

pub use path::{
    big_loop, default_base, loop_order, path_clearance, Composition, Lasso, LoopSpec, PathPlan,
    Segment,
};

/// Accepted range of the integrator tolerance.
pub const TOL_RANGE: (f64, f64) = (1e-13, 1e-3);
/// Smallest `|det M|` accepted for a monodromy matrix.
const DET_FLOOR: f64 = 1e-8;

/// `Z(end) = matrix * Z(start)`.
#[derive(Clone, Debug)]
pub struct Transport {
    pub matrix: CMatrix,
    /// Sum of the local error estimates.
    pub error: f64,
    pub steps: usize,
}

// Dormand-Prince 5(4)
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn check_tol(tol: f64) -> Result<()> {
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
        return Err(Error::InvalidInput(format!(
            "integrator tolerance {tol:e} outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(())
}

/// Transport of `dY/dx = A(x, t) Y` along `path`.
pub fn integrate_along(
    sys: &LinearSystem,
    path: &[Segment],
    t: &ParamPoint,
    tol: f64,
) -> Result<Transport> {
    integrate_numeric(&sys.at(t)?, path, tol)
}

/// Transport along `path` for a system already evaluated at a parameter point.
pub fn integrate_numeric(ns: &NumericSystem, path: &[Segment], tol: f64) -> Result<Transport> {
    let n = ns.n();
    transport_state(ns, path, CMatrix::identity(n, n), tol)
}

/// Continue the solution with value `z0` at the start of `path`; returns its
/// value at the end.
pub fn transport_state(
    ns: &NumericSystem,
    path: &[Segment],
    z0: CMatrix,
    tol: f64,
) -> Result<Transport> {
    check_tol(tol)?;
    if let Some((d, j)) = path_clearance(ns, path) {
        let floor = 1e-12 * (1.0 + path.iter().map(|s| s.start().norm()).fold(0.0, f64::max));
        if d <= floor {
            return Err(Error::PathTooCloseToPole {
                pole: j,
                distance: d,
                clearance: floor,
            });
        }
    }
    let mut out = Transport {
        matrix: z0,
        error: 0.0,
        steps: 0,
    };
    let mut offset = 0.0;
    for seg in path {
        integrate_segment(ns, seg, tol, offset, &mut out)?;
        offset += seg.length();
    }
    Ok(out)
}

fn integrate_segment(
    ns: &NumericSystem,
    seg: &Segment,
    tol: f64,
    offset: f64,
    out: &mut Transport,
) -> Result<()> {
    let len = seg.length();
    if len == 0.0 {
        return Ok(());
    }
    let n = ns.n();
    let mut buf = CMatrix::zeros(n, n);
    // B(s) = A(x(s)) dx/ds
    let coeff = |s: f64, buf: &mut CMatrix| {
        ns.eval_into(seg.point(s), buf);
        *buf *= seg.tangent(s);
    };
    let mut k: Vec<CMatrix> = vec![CMatrix::zeros(n, n); 7];
    let mut s = 0.0;
    let mut h = (0.25 * ns.clearance(seg.start())).min(len).min(0.05);
    coeff(0.0, &mut buf);
    k[0] = &buf * &out.matrix;
    while s < len {
        let cl = ns.clearance(seg.point(s));
        h = h.min(0.25 * cl).min(len - s);
        if h <= 1e-14 * len.max(1.0) && s + h < len {
            return Err(Error::StepSizeUnderflow { at: offset + s });
        }
        let z = &out.matrix;
        for i in 1..7 {
            let mut y = z.clone();
            for (j, kj) in k.iter().enumerate().take(i) {
                if A[i][j] != 0.0 {
                    y += kj * Complex64::new(h * A[i][j], 0.0);
                }
            }
            coeff(s + C[i] * h, &mut buf);
            k[i] = &buf * &y;
        }
        // stage 7 was evaluated at the fifth-order solution
        let mut z5 = z.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[6][j] != 0.0 {
                z5 += kj * Complex64::new(h * A[6][j], 0.0);
            }
        }
        let mut err = CMatrix::zeros(n, n);
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err += kj * Complex64::new(h * E[j], 0.0);
            }
        }
        let e = max_abs(&err);
        let scale = tol * (1.0 + max_abs(z).max(max_abs(&z5)));
        let ratio = e / scale;
        if !ratio.is_finite() {
            return Err(Error::StepSizeUnderflow { at: offset + s });
        }
        if ratio <= 1.0 {
            s += h;
            out.matrix = z5;
            out.error += e;
            out.steps += 1;
            k[0] = k[6].clone();
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if ratio > 1.0 && h <= 1e-14 * len.max(1.0) {
            return Err(Error::StepSizeUnderflow { at: offset + s });
        }
    }
    Ok(())
}

/// Monodromy matrices at one parameter point.
#[derive(Clone, Debug)]
pub struct PointMonodromy {
    /// Pole index of each loop, in loop order.
    pub poles: Vec<usize>,
    pub matrices: Vec<CMatrix>,
    /// Estimated error of each matrix.
    pub errors: Vec<f64>,
}

/// Norm of a matrix and its inverse; `None` if numerically singular.
fn condition(m: &CMatrix) -> Option<(f64, CMatrix)> {
    let inv = m.clone().try_inverse()?;
    Some((max_abs(m) * max_abs(&inv) * m.nrows() as f64, inv))
}

/// Loop monodromy `M = T_a^-1 T_c T_a` in the frame `Z_0(base) = I`.
fn lasso_monodromy(ns: &NumericSystem, lasso: &Lasso, tol: f64) -> Result<(CMatrix, f64)> {
    let ta = integrate_numeric(ns, &lasso.approach, tol)?;
    let tc = integrate_numeric(ns, &[lasso.circle], tol)?;
    let (kappa, ta_inv) = condition(&ta.matrix).ok_or(Error::SingularMatrix)?;
    let m = &ta_inv * &tc.matrix * &ta.matrix;
    let err = kappa * (tc.error + 2.0 * max_abs(&tc.matrix) * ta.error * max_abs(&ta_inv));
    if m.determinant().norm() <= DET_FLOOR {
        return Err(Error::SingularMatrix);
    }
    Ok((m, err))
}

/// Monodromy along each loop of `plan` for a system evaluated at one point.
pub fn monodromy_numeric(ns: &NumericSystem, plan: &PathPlan, tol: f64) -> Result<PointMonodromy> {
    check_tol(tol)?;
    let loops = plan.realize(ns)?;
    let per: Vec<(CMatrix, f64)> = loops
        .par_iter()
        .map(|l| lasso_monodromy(ns, l, tol))
        .collect::<Result<_>>()?;
    let (matrices, errors) = per.into_iter().unzip();
    Ok(PointMonodromy {
        poles: loops.iter().map(|l| l.pole).collect(),
        matrices,
        errors,
    })
}

/// Monodromy data over a parameter grid.
#[derive(Clone, Debug)]
pub struct MonodromyData {
    pub plan: PathPlan,
    pub grid: Vec<ParamPoint>,
    pub tol: f64,
    /// One entry per grid point; failures are kept, not propagated.
    pub results: Vec<Result<PointMonodromy>>,
}

impl MonodromyData {
    /// Successful grid points with their index.
    pub fn successes(&self) -> impl Iterator<Item = (usize, &PointMonodromy)> {
        self.results
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().ok().map(|m| (i, m)))
    }

    pub fn to_json(&self) -> MonodromyJson {
        MonodromyJson {
            grid: self
                .grid
                .iter()
                .map(|t| t.coords().iter().map(|z| complex_out(*z)).collect())
                .collect(),
            plan: self.plan.clone(),
            tol: self.tol,
            loop_poles: self
                .results
                .iter()
                .map(|r| r.as_ref().ok().map(|m| m.poles.clone()))
                .collect(),
            matrices: self
                .results
                .iter()
                .map(|r| {
                    r.as_ref()
                        .ok()
                        .map(|m| m.matrices.iter().map(matrix_out).collect())
                })
                .collect(),
            errors: self
                .results
                .iter()
                .map(|r| r.as_ref().ok().map(|m| m.errors.clone()))
                .collect(),
            failures: self
                .results
                .iter()
                .map(|r| r.as_ref().err().map(|e| e.to_string()))
                .collect(),
        }
    }

    /// One row per (grid point, loop, entry).
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let dim = self.grid.first().map_or(0, |t| t.dim());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["grid".to_string()];
        for k in 0..dim {
            header.push(format!("t{k}_re"));
            header.push(format!("t{k}_im"));
        }
        header.extend(["loop", "pole", "row", "col", "re", "im", "error"].map(String::from));
        w.write_record(&header)?;
        for (i, m) in self.successes() {
            let t: Vec<String> = self.grid[i]
                .coords()
                .iter()
                .flat_map(|z| [z.re.to_string(), z.im.to_string()])
                .collect();
            for (l, (mat, err)) in m.matrices.iter().zip(&m.errors).enumerate() {
                for r in 0..mat.nrows() {
                    for c in 0..mat.ncols() {
                        let z = mat[(r, c)];
                        let mut row = vec![i.to_string()];
                        row.extend(t.iter().cloned());
                        row.extend([l, m.poles[l], r, c].map(|v| v.to_string()));
                        row.extend([z.re, z.im, *err].map(|v| v.to_string()));
                        w.write_record(&row)?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonodromyJson {
    pub grid: Vec<Vec<[f64; 2]>>,
    pub plan: PathPlan,
    pub tol: f64,
    pub loop_poles: Vec<Option<Vec<usize>>>,
    pub matrices: Vec<Option<Vec<MatrixJson>>>,
    pub errors: Vec<Option<Vec<f64>>>,
    pub failures: Vec<Option<String>>,
}

/// Monodromy at every grid point, computed concurrently and returned in
/// grid order.
pub fn monodromy_rep(
    sys: &LinearSystem,
    plan: &PathPlan,
    grid: &[ParamPoint],
    tol: f64,
) -> Result<MonodromyData> {
    check_tol(tol)?;
    let results = grid
        .par_iter()
        .map(|t| monodromy_numeric(&sys.at(t)?, plan, tol))
        .collect();
    Ok(MonodromyData {
        plan: plan.clone(),
        grid: grid.to_vec(),
        tol,
        results,
    })
}

/// Product of the loop matrices in the order that gives the big loop.
pub fn loop_product(m: &PointMonodromy, composition: Composition) -> CMatrix {
    let n = m.matrices.first().map_or(0, |x| x.nrows());
    let mut p = CMatrix::identity(n, n);
    match composition {
        Composition::RightFirst => m.matrices.iter().for_each(|x| p *= x),
        Composition::LeftFirst => m.matrices.iter().rev().for_each(|x| p *= x),
    }
    p
}

/// Largest `||M_1 ... M_s - M_inf^-1||` over the successful grid points.
/// `M_inf = I` when infinity is an ordinary point; otherwise the inverse is
/// the monodromy of a big positive circle around all poles.
pub fn check_product_relation(md: &MonodromyData, sys: &LinearSystem) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, m) in md.successes() {
        let ns = sys.at(&md.grid[i])?;
        let product = loop_product(m, md.plan.composition);
        let target = if ns.infinity_is_regular() {
            CMatrix::identity(ns.n(), ns.n())
        } else {
            integrate_numeric(&ns, &big_loop(md.plan.base, &ns.pole_locations()), md.tol)?.matrix
        };
        worst = worst.max((product - target).norm());
    }
    Ok(worst)
}

/// `exp(2 pi i A~(t))`.
pub fn local_monodromy_from_exponent(atilde: &ParamMatrix, t: &ParamPoint) -> Result<CMatrix> {
    Ok(exp_two_pi_i(&atilde.eval(t)?))
}
