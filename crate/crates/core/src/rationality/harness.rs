use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{detect_rational_in_x, Annulus, Candidate, DetectOptions, Fraction, RationalVerdict, SampledFunction};
use crate::continuation::{monodromy_numeric, transport_state, MonodromyData, Segment};
use crate::error::{Error, Result};
use crate::param::ParamPoint;
use crate::systems::{LinearSystem, NumericSystem};
use crate::{CMatrix, Complex64};

/// Settings for [`invariance_rationality_harness`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarnessOptions {
    pub detect: DetectOptions,
    /// Relative change allowed after continuation around a loop.
    pub invariance_tol: f64,
    /// Points per grid point at which invariance is tested.
    pub samples: usize,
    /// Tolerance for continuing `Z_0` from the base point.
    pub integrator_tol: f64,
    /// Step of the five-point differences in `t`.
    pub t_step: f64,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            detect: DetectOptions::default(),
            invariance_tol: 1e-6,
            samples: 3,
            integrator_tol: 1e-12,
            t_step: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HarnessReport {
    pub invariant: bool,
    /// `None` when the candidate is not invariant, or detection failed.
    pub rational: Option<bool>,
    pub m: Option<usize>,
    /// Fitted fraction per grid point.
    pub coefficients: Vec<Fraction>,
    /// Largest relative change under continuation, per grid point.
    pub residuals: Vec<Option<f64>>,
    pub failures: Vec<Option<String>>,
    /// Why detection stopped, e.g. inconsistent samples.
    pub detection_error: Option<String>,
}

/// Geometry shared by the sampler and the continuation of `Z_0`.
#[derive(Clone, Copy)]
struct Frame {
    base: Complex64,
    /// Cauchy radius; samples stay `2 radius` away from poles.
    radius: f64,
}

fn frame_for(base: Complex64, poles: &[Complex64]) -> Frame {
    let mut sep: f64 = 1.0;
    for (i, a) in poles.iter().enumerate() {
        for b in &poles[i + 1..] {
            sep = sep.min((a - b).norm());
        }
        sep = sep.min((a - base).norm());
    }
    Frame {
        base,
        radius: 0.1 * sep,
    }
}

fn region_for(poles: &[Complex64]) -> Annulus {
    if poles.is_empty() {
        return Annulus::default();
    }
    let c = poles.iter().sum::<Complex64>() / poles.len() as f64;
    let spread = poles.iter().map(|a| (a - c).norm()).fold(0.0, f64::max);
    Annulus {
        center: c,
        inner: 0.0,
        outer: spread + 1.0,
    }
}

fn admissible(frame: Frame, poles: &[Complex64], x: Complex64) -> bool {
    let seg = Segment::line(frame.base, x);
    poles
        .iter()
        .all(|p| seg.distance_to(*p) >= 2.0 * frame.radius && (x - p).norm() >= 3.0 * frame.radius)
}

/// `Z_0(x)` continued along the straight line from the base point.
fn z0(ns: &NumericSystem, base: Complex64, x: Complex64, tol: f64) -> Result<CMatrix> {
    let n = ns.n();
    if (x - base).norm() == 0.0 {
        return Ok(CMatrix::identity(n, n));
    }
    Ok(transport_state(ns, &[Segment::line(base, x)], CMatrix::identity(n, n), tol)?.matrix)
}

/// Derivative from values at `-2h, -h, h, 2h`.
fn stencil(v: &[CMatrix], h: f64) -> CMatrix {
    (&v[0] - &v[3] + (&v[2] - &v[1]) * Complex64::new(8.0, 0.0)) / Complex64::new(12.0 * h, 0.0)
}

/// `Z_0`, its `t`-derivatives, and the loop matrices with their derivatives.
struct PointData {
    ns: NumericSystem,
    /// Systems at `t + j h e_k` for `j = -2, -1, 1, 2`.
    shifted: Vec<[NumericSystem; 4]>,
    loops: Vec<CMatrix>,
    loop_derivs: Vec<Vec<CMatrix>>,
}

impl PointData {
    fn z_and_dz(&self, base: Complex64, x: Complex64, tol: f64, h: f64) -> Result<(CMatrix, Vec<CMatrix>)> {
        let z = z0(&self.ns, base, x, tol)?;
        let dz = self
            .shifted
            .iter()
            .map(|s| {
                let v = s
                    .iter()
                    .map(|ns| z0(ns, base, x, tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(stencil(&v, h))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((z, dz))
    }
}

fn point_data(
    sys: &LinearSystem,
    md: &MonodromyData,
    k: usize,
    derivs: bool,
    h: f64,
) -> Result<PointData> {
    let t = &md.grid[k];
    let m = md.results[k].as_ref().map_err(Clone::clone)?;
    let ns = sys.at(t)?;
    let mut shifted = Vec::new();
    let mut loop_derivs = vec![Vec::new(); m.matrices.len()];
    if derivs {
        for p in 0..t.dim() {
            let sys4 = [-2.0, -1.0, 1.0, 2.0]
                .map(|j| sys.at(&t.shifted(p, Complex64::new(j * h, 0.0))));
            let sys4 = sys4.into_iter().collect::<Result<Vec<_>>>()?;
            let mons = sys4
                .iter()
                .map(|ns| monodromy_numeric(ns, &md.plan, md.tol))
                .collect::<Result<Vec<_>>>()?;
            for (i, d) in loop_derivs.iter_mut().enumerate() {
                let v: Vec<CMatrix> = mons.iter().map(|m| m.matrices[i].clone()).collect();
                d.push(stencil(&v, h));
            }
            shifted.push(sys4.try_into().expect("four shifted systems"));
        }
    }
    Ok(PointData {
        ns,
        shifted,
        loops: m.matrices.clone(),
        loop_derivs,
    })
}

/// Largest relative change of the candidate under continuation around each
/// loop, over `samples` points.
fn invariance_residual(
    data: &PointData,
    frame: Frame,
    candidate: &dyn Candidate,
    opts: &HarnessOptions,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let poles = data.ns.pole_locations();
    let region = region_for(&poles);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let x = (0..500)
            .map(|_| region.draw(rng))
            .find(|x| admissible(frame, &poles, *x))
            .ok_or_else(|| Error::EvaluationFailure("no admissible sample point".into()))?;
        let (z, dz) = data.z_and_dz(frame.base, x, opts.integrator_tol, opts.t_step)?;
        let c0 = candidate.eval(&z, &dz)?;
        for (i, m) in data.loops.iter().enumerate() {
            let zg = &z * m;
            // d(Z M) = dZ M + Z dM
            let dzg: Vec<CMatrix> = dz
                .iter()
                .zip(&data.loop_derivs[i])
                .map(|(d, dm)| d * m + &z * dm)
                .collect();
            let ci = candidate.eval(&zg, &dzg)?;
            worst = worst.max((ci - c0).norm() / c0.norm().max(1.0));
        }
    }
    Ok(worst)
}

/// Tests whether `candidate(Z_0)` is single-valued around every loop of
/// `md`, and if so whether it is rational in `x` at each grid point.
pub fn invariance_rationality_harness(
    sys: &LinearSystem,
    md: &MonodromyData,
    candidate: &dyn Candidate,
    opts: &HarnessOptions,
) -> Result<HarnessReport> {
    let derivs = candidate.uses_t_derivatives();
    let base = md.plan.base;
    let per: Vec<Result<(PointData, Frame, f64)>> = (0..md.grid.len())
        .into_par_iter()
        .map(|k| {
            let data = point_data(sys, md, k, derivs, opts.t_step)?;
            let frame = frame_for(base, &data.ns.pole_locations());
            let mut rng = ChaCha8Rng::seed_from_u64(opts.detect.seed);
            rng.set_stream(0xface_0000 + k as u64);
            let r = invariance_residual(&data, frame, candidate, opts, &mut rng)?;
            Ok((data, frame, r))
        })
        .collect();
    let residuals: Vec<Option<f64>> = per.iter().map(|r| r.as_ref().ok().map(|x| x.2)).collect();
    let failures: Vec<Option<String>> = per.iter().map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
    let mut report = HarnessReport {
        invariant: false,
        rational: None,
        m: None,
        coefficients: Vec::new(),
        residuals,
        failures,
        detection_error: None,
    };
    let ok: Vec<_> = per
        .into_iter()
        .enumerate()
        .filter_map(|(k, r)| r.ok().map(|v| (k, v)))
        .collect();
    if ok.is_empty() {
        return Err(Error::EvaluationFailure("no grid point could be evaluated".into()));
    }
    report.invariant = ok.iter().all(|(_, (_, _, r))| *r <= opts.invariance_tol);
    if !report.invariant {
        return Ok(report);
    }

    let grid: Vec<ParamPoint> = ok.iter().map(|(k, _)| md.grid[*k].clone()).collect();
    let table: Vec<(PointData, Frame)> = ok.into_iter().map(|(_, (d, f, _))| (d, f)).collect();
    let (itol, h) = (opts.integrator_tol, opts.t_step);
    let index_of = {
        let grid = grid.clone();
        move |t: &ParamPoint| grid.iter().position(|p| p == t)
    };
    let regions: Vec<Annulus> = table.iter().map(|(d, _)| region_for(&d.ns.pole_locations())).collect();
    let radius = table.iter().map(|(_, f)| f.radius).fold(f64::INFINITY, f64::min);
    let lookup = index_of.clone();
    let f = SampledFunction::from_values(
        |x, t| {
            let i = lookup(t).ok_or_else(|| Error::InvalidInput("parameter point outside the grid".into()))?;
            let (d, fr) = &table[i];
            let (z, dz) = d.z_and_dz(fr.base, x, itol, h)?;
            candidate.eval(&z, &dz)
        },
        radius,
        // values carry the integrator error, amplified by differencing in t
        if derivs { itol / h } else { itol },
    )
    .with_region(|t| index_of(t).map_or_else(Annulus::default, |i| regions[i]))
    .restricted(|x, t| {
        index_of(t).is_some_and(|i| {
            let (d, fr) = &table[i];
            admissible(*fr, &d.ns.pole_locations(), x)
        })
    });
    match detect_rational_in_x(&f, &grid, &opts.detect) {
        Ok(RationalVerdict::Rational { m, coefficients }) => {
            report.rational = Some(true);
            report.m = Some(m);
            report.coefficients = coefficients;
        }
        Ok(RationalVerdict::NotRationalUpTo { .. }) => report.rational = Some(false),
        Err(e) => report.detection_error = Some(e.to_string()),
    }
    Ok(report)
}
