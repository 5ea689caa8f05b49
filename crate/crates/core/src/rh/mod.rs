//! Inverse monodromy: a Fuchsian system `sum_i B_i / (x - a_i)` with
//! prescribed monodromy, started from `B_i = log(M_i) / (2 pi i)` and refined
//! by Levenberg-Marquardt on the monodromy map.

mod log;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuation::{loop_order, monodromy_numeric, Composition, MonodromyData, PathPlan};
use crate::error::{Error, Result};
use crate::io::{complex_out, matrix_in, matrix_out, ComplexJson, MatrixJson};
use crate::linalg::max_abs;
use crate::param::ParamPoint;
use crate::systems::{LinearSystem, NumericSystem};
use crate::{CMatrix, Complex64};

pub use log::{log_lipschitz, matrix_log_tracked, CUT_BAND};

/// Allowed deviation of `M_1 ... M_s` from the identity.
pub const PRODUCT_TOL: f64 = 1e-8;

/// Monodromy data to be realized: loop `i` goes around `poles[i]`.
#[derive(Clone, Debug)]
pub struct RHTarget {
    poles: Vec<Complex64>,
    base: Complex64,
    grid: Vec<ParamPoint>,
    targets: Vec<Vec<CMatrix>>,
}

impl RHTarget {
    /// Checks sizes, invertibility, `M_1 ... M_s = I`, and that the poles are
    /// listed in the loop order seen from `base` (up to rotation), which is
    /// what makes the product relation hold for a Fuchsian system.
    pub fn new(poles: Vec<Complex64>, base: Complex64, grid: Vec<ParamPoint>, targets: Vec<Vec<CMatrix>>) -> Result<Self> {
        let s = poles.len();
        if s == 0 {
            return Err(Error::InvalidInput("no singular points".into()));
        }
        if grid.is_empty() || grid.len() != targets.len() {
            return Err(Error::InvalidInput("need one target list per grid point".into()));
        }
        for i in 0..s {
            if (poles[i] - base).norm() == 0.0 {
                return Err(Error::InvalidInput("base point is a singular point".into()));
            }
            for j in (i + 1)..s {
                if (poles[i] - poles[j]).norm() <= crate::systems::COLLISION_EPS {
                    return Err(Error::PoleCollisionAtParameter { first: i, second: j });
                }
            }
        }
        let order = loop_order(base, &poles, Composition::RightFirst);
        let start = order.iter().position(|&k| k == 0).expect("all indices present");
        if (0..s).any(|k| order[(start + k) % s] != k) {
            return Err(Error::InvalidInput(format!(
                "poles must be listed in loop order {order:?} (up to rotation) as seen from the base point"
            )));
        }
        let n = targets[0].first().map_or(0, |m| m.nrows());
        for (k, ms) in targets.iter().enumerate() {
            if ms.len() != s || ms.iter().any(|m| m.nrows() != n || m.ncols() != n) {
                return Err(Error::InvalidInput(format!(
                    "grid point {k}: need {s} square targets of size {n}"
                )));
            }
            if ms.iter().any(|m| m.determinant().norm() <= 1e-8) {
                return Err(Error::AtGridPoint {
                    index: k,
                    source: Box::new(Error::SingularMatrix),
                });
            }
            let mut p = CMatrix::identity(n, n);
            for m in ms {
                p *= m;
            }
            let dev = max_abs(&(p - CMatrix::identity(n, n)));
            if dev > PRODUCT_TOL {
                return Err(Error::InvalidInput(format!(
                    "grid point {k}: M_1 ... M_s deviates from I by {dev:.3e}"
                )));
            }
        }
        Ok(RHTarget {
            poles,
            base,
            grid,
            targets,
        })
    }

    /// Targets from computed monodromy of a system with constant poles.
    pub fn from_monodromy(md: &MonodromyData, sys: &LinearSystem) -> Result<Self> {
        if md.plan.composition != Composition::RightFirst {
            return Err(Error::InvalidInput("targets use the right-first composition".into()));
        }
        let mut poles: Option<Vec<Complex64>> = None;
        let mut targets = Vec::with_capacity(md.grid.len());
        for (k, r) in md.results.iter().enumerate() {
            let m = r.as_ref().map_err(|e| Error::AtGridPoint {
                index: k,
                source: Box::new(e.clone()),
            })?;
            let locs = sys.at(&md.grid[k])?.pole_locations();
            let here: Vec<Complex64> = m.poles.iter().map(|&j| locs[j]).collect();
            match &poles {
                None => poles = Some(here),
                Some(p) => {
                    if p.iter().zip(&here).any(|(a, b)| (a - b).norm() > 1e-12) {
                        return Err(Error::InvalidInput("singular points must not move over the grid".into()));
                    }
                }
            }
            targets.push(m.matrices.clone());
        }
        Self::new(poles.unwrap_or_default(), md.plan.base, md.grid.clone(), targets)
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn grid(&self) -> &[ParamPoint] {
        &self.grid
    }

    pub fn targets(&self) -> &[Vec<CMatrix>] {
        &self.targets
    }

    pub fn n(&self) -> usize {
        self.targets[0][0].nrows()
    }

    /// Default lassos around the poles in the listed order.
    pub fn plan(&self) -> PathPlan {
        PathPlan::lassos(self.base, (0..self.poles.len()).collect())
    }

    pub fn to_json(&self) -> RHTargetJson {
        let cj = |z: Complex64| ComplexJson::Pair(complex_out(z));
        RHTargetJson {
            poles: self.poles.iter().map(|z| cj(*z)).collect(),
            base_point: cj(self.base),
            grid: self.grid.iter().map(|t| t.coords().iter().map(|z| cj(*z)).collect()).collect(),
            targets: self
                .targets
                .iter()
                .map(|ms| {
                    ms.iter()
                        .map(|m| m.row_iter().map(|r| r.iter().map(|z| cj(*z)).collect()).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RHTargetJson {
    pub poles: Vec<ComplexJson>,
    pub base_point: ComplexJson,
    pub grid: Vec<Vec<ComplexJson>>,
    pub targets: Vec<Vec<Vec<Vec<ComplexJson>>>>,
}

impl RHTargetJson {
    pub fn to_target(&self) -> Result<RHTarget> {
        let targets = self
            .targets
            .iter()
            .map(|ms| ms.iter().map(|m| matrix_in(m)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        RHTarget::new(
            self.poles.iter().map(|z| z.value()).collect(),
            self.base_point.value(),
            self.grid
                .iter()
                .map(|t| ParamPoint::new(t.iter().map(|z| z.value()).collect()))
                .collect(),
            targets,
        )
    }
}

/// Logarithm candidates `N_i(t) = log(M_i(t)) / (2 pi i)` at every grid
/// point, each seeded by its value at the previous point.
pub fn rh_initialize(target: &RHTarget) -> Result<Vec<Vec<CMatrix>>> {
    let mut out: Vec<Vec<CMatrix>> = Vec::with_capacity(target.grid.len());
    for (k, ms) in target.targets.iter().enumerate() {
        let logs = initialize_point(ms, out.last()).map_err(|e| Error::AtGridPoint {
            index: k,
            source: Box::new(e),
        })?;
        out.push(logs);
    }
    Ok(out)
}

fn initialize_point(ms: &[CMatrix], seeds: Option<&Vec<CMatrix>>) -> Result<Vec<CMatrix>> {
    ms.iter()
        .enumerate()
        .map(|(i, m)| matrix_log_tracked(m, seeds.map(|s| &s[i])))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RhOptions {
    pub max_iter: usize,
    /// Converged when `sqrt(sum_i ||M_i(B) - M_i||_F^2)` is at most this.
    pub tol_fit: f64,
    /// Initial damping relative to the largest diagonal entry of `J^H J`.
    pub damping: f64,
    pub integrator_tol: f64,
    /// Forward difference step on residue entries.
    pub fd_step: f64,
}

impl Default for RhOptions {
    fn default() -> Self {
        RhOptions {
            max_iter: 50,
            tol_fit: 1e-8,
            damping: 1e-3,
            integrator_tol: 1e-12,
            fd_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub damping: f64,
    pub accepted: bool,
    /// Ratio of extreme singular values of the Jacobian in use.
    pub jacobian_condition: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Start {
    Logarithms,
    PreviousPoint,
}

/// Result at one grid point. `residues` is the best iterate even when the
/// fit did not converge.
#[derive(Clone, Debug)]
pub struct RhPoint {
    pub residues: Vec<CMatrix>,
    pub initial_residual: f64,
    pub fit_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start: Start,
    pub failure: Option<Error>,
    pub log: Vec<IterationRecord>,
}

#[derive(Clone, Debug)]
pub struct RHSolution {
    pub poles: Vec<Complex64>,
    pub base: Complex64,
    pub grid: Vec<ParamPoint>,
    pub integrator_tol: f64,
    pub points: Vec<RhPoint>,
}

impl RHSolution {
    pub fn converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    /// The realized system at grid point `k`.
    pub fn system(&self, k: usize) -> Result<NumericSystem> {
        NumericSystem::fuchsian(&self.poles, &self.points[k].residues)
    }

    pub fn to_json(&self) -> RHSolutionJson {
        RHSolutionJson {
            poles: self.poles.iter().map(|z| complex_out(*z)).collect(),
            base_point: complex_out(self.base),
            grid: self.grid.iter().map(|t| t.coords().iter().map(|z| complex_out(*z)).collect()).collect(),
            residues: self
                .points
                .iter()
                .map(|p| p.residues.iter().map(matrix_out).collect())
                .collect(),
            initial_residual: self.points.iter().map(|p| p.initial_residual).collect(),
            fit_residual: self.points.iter().map(|p| p.fit_residual).collect(),
            iterations: self.points.iter().map(|p| p.iterations).collect(),
            converged: self.points.iter().map(|p| p.converged).collect(),
            start: self.points.iter().map(|p| p.start).collect(),
            failures: self
                .points
                .iter()
                .map(|p| p.failure.as_ref().map(|e| e.to_string()))
                .collect(),
            log: self.points.iter().map(|p| p.log.clone()).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RHSolutionJson {
    pub poles: Vec<[f64; 2]>,
    pub base_point: [f64; 2],
    pub grid: Vec<Vec<[f64; 2]>>,
    pub residues: Vec<Vec<MatrixJson>>,
    pub initial_residual: Vec<f64>,
    pub fit_residual: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub start: Vec<Start>,
    pub failures: Vec<Option<String>>,
    pub log: Vec<Vec<IterationRecord>>,
}

/// The monodromy map restricted to one grid point.
struct Problem<'a> {
    poles: &'a [Complex64],
    plan: PathPlan,
    targets: &'a [CMatrix],
    n: usize,
    tol: f64,
}

impl Problem<'_> {
    fn nparams(&self) -> usize {
        (self.poles.len() - 1) * self.n * self.n
    }

    /// `B_1 ... B_{s-1}` from the parameter vector, `B_s = -sum`.
    fn residues(&self, theta: &[Complex64]) -> Vec<CMatrix> {
        let nn = self.n * self.n;
        let mut out: Vec<CMatrix> = theta
            .chunks(nn)
            .map(|c| CMatrix::from_column_slice(self.n, self.n, c))
            .collect();
        let sum = out.iter().fold(CMatrix::zeros(self.n, self.n), |acc, b| acc + b);
        out.push(-sum);
        out
    }

    fn params(&self, residues: &[CMatrix]) -> Vec<Complex64> {
        residues[..self.poles.len() - 1]
            .iter()
            .flat_map(|b| b.iter().copied())
            .collect()
    }

    /// `M_i(B) - M_i` stacked.
    fn misfit(&self, theta: &[Complex64]) -> Result<Vec<Complex64>> {
        let ns = NumericSystem::fuchsian(self.poles, &self.residues(theta))?;
        let got = monodromy_numeric(&ns, &self.plan, self.tol)?;
        Ok(got
            .matrices
            .iter()
            .zip(self.targets)
            .flat_map(|(m, t)| (m - t).iter().copied().collect::<Vec<_>>())
            .collect())
    }

    fn jacobian(&self, theta: &[Complex64], r: &[Complex64], h: f64) -> Result<CMatrix> {
        let cols: Vec<Vec<Complex64>> = (0..theta.len())
            .into_par_iter()
            .map(|j| {
                let mut th = theta.to_vec();
                th[j] += h;
                let rj = self.misfit(&th)?;
                Ok(rj.iter().zip(r).map(|(a, b)| (a - b) / h).collect())
            })
            .collect::<Result<_>>()?;
        Ok(CMatrix::from_fn(r.len(), theta.len(), |i, j| cols[j][i]))
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn condition(j: &CMatrix) -> Option<f64> {
    let sv = j.clone().singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    (lo > 0.0).then(|| hi / lo)
}

fn solve_point(problem: &Problem<'_>, starts: Vec<(Start, Vec<CMatrix>)>, opts: &RhOptions) -> RhPoint {
    let mut best: Option<(Start, Vec<Complex64>, Vec<Complex64>)> = None;
    let mut first_error = None;
    for (kind, residues) in starts {
        let theta = problem.params(&residues);
        match problem.misfit(&theta) {
            Ok(r) => {
                if best.as_ref().is_none_or(|(_, _, rb)| norm(&r) < norm(rb)) {
                    best = Some((kind, theta, r));
                }
            }
            Err(e) => first_error = first_error.or(Some(e)),
        }
    }
    let Some((start, mut theta, mut r)) = best else {
        return RhPoint {
            residues: Vec::new(),
            initial_residual: f64::INFINITY,
            fit_residual: f64::INFINITY,
            iterations: 0,
            converged: false,
            start: Start::Logarithms,
            failure: Some(first_error.unwrap_or(Error::InvalidInput("no starting point".into()))),
            log: Vec::new(),
        };
    };
    let initial = norm(&r);
    let mut point = RhPoint {
        residues: problem.residues(&theta),
        initial_residual: initial,
        fit_residual: initial,
        iterations: 0,
        converged: initial <= opts.tol_fit,
        start,
        failure: None,
        log: vec![IterationRecord {
            iteration: 0,
            residual: initial,
            damping: 0.0,
            accepted: true,
            jacobian_condition: None,
        }],
    };
    if point.converged {
        return point;
    }
    let mut jac = match problem.jacobian(&theta, &r, opts.fd_step) {
        Ok(j) => j,
        Err(e) => {
            point.failure = Some(e);
            return point;
        }
    };
    let mut cond = condition(&jac);
    let mut f = initial * initial;
    let mut hess = jac.adjoint() * &jac;
    let mut grad = jac.adjoint() * CMatrix::from_column_slice(r.len(), 1, &r);
    let max_diag = |h: &CMatrix| (0..h.nrows()).map(|i| h[(i, i)].re).fold(0.0, f64::max);
    let mut mu = opts.damping * max_diag(&hess).max(f64::MIN_POSITIVE);
    let mut nu = 2.0;
    let p = problem.nparams();
    for it in 1..=opts.max_iter {
        point.iterations = it;
        let lhs = &hess + CMatrix::identity(p, p) * Complex64::new(mu, 0.0);
        let Some(delta) = lhs.lu().solve(&(-&grad)) else {
            point.failure = Some(Error::NonFuchsianLikely { residual: point.fit_residual });
            return point;
        };
        let step = delta.norm();
        if step <= 1e-15 * (norm(&theta) + 1e-15) {
            point.failure = Some(Error::NonFuchsianLikely { residual: point.fit_residual });
            return point;
        }
        let trial: Vec<Complex64> = theta.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
        let predicted = (delta.adjoint() * (&delta * Complex64::new(mu, 0.0) - &grad))[(0, 0)].re;
        let outcome = problem.misfit(&trial).ok().map(|rt| {
            let ft = norm(&rt).powi(2);
            (rt, ft)
        });
        let rho = match &outcome {
            Some((_, ft)) if ft.is_finite() && predicted > 0.0 => (f - ft) / predicted,
            _ => -1.0,
        };
        let accepted = rho > 0.0;
        if accepted {
            let (rt, ft) = outcome.expect("accepted steps were evaluated");
            theta = trial;
            r = rt;
            f = ft;
            point.fit_residual = f.sqrt();
            point.residues = problem.residues(&theta);
            mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
        }
        point.log.push(IterationRecord {
            iteration: it,
            residual: point.fit_residual,
            damping: mu,
            accepted,
            jacobian_condition: cond,
        });
        if point.fit_residual <= opts.tol_fit {
            point.converged = true;
            return point;
        }
        if !mu.is_finite() || mu > 1e20 * max_diag(&hess).max(1.0) {
            point.failure = Some(Error::NonFuchsianLikely { residual: point.fit_residual });
            return point;
        }
        if accepted {
            match problem.jacobian(&theta, &r, opts.fd_step) {
                Ok(j) => jac = j,
                Err(e) => {
                    point.failure = Some(e);
                    return point;
                }
            }
            cond = condition(&jac);
            hess = jac.adjoint() * &jac;
            grad = jac.adjoint() * CMatrix::from_column_slice(r.len(), 1, &r);
        }
    }
    point.failure = Some(Error::MaxIterationsExceeded {
            iterations: opts.max_iter,
            residual: point.fit_residual,
        });
    point
}

/// Fit residues at every grid point, in order. Each point starts from the
/// better of the tracked logarithms and the previous point's solution.
pub fn rh_solve(target: &RHTarget, opts: &RhOptions) -> Result<RHSolution> {
    let s = target.poles.len();
    if s < 2 {
        return Err(Error::InvalidInput("need at least two singular points".into()));
    }
    if opts.max_iter == 0 || !(opts.tol_fit > 0.0) || !(opts.damping > 0.0) || !(opts.fd_step > 0.0) {
        return Err(Error::InvalidInput("solver options must be positive".into()));
    }
    let plan = target.plan();
    let n = target.n();
    let mut points: Vec<RhPoint> = Vec::with_capacity(target.grid.len());
    let mut seeds: Option<Vec<CMatrix>> = None;
    for (k, ms) in target.targets.iter().enumerate() {
        let problem = Problem {
            poles: &target.poles,
            plan: plan.clone(),
            targets: ms,
            n,
            tol: opts.integrator_tol,
        };
        let mut starts = Vec::new();
        let mut init_error = None;
        match initialize_point(ms, seeds.as_ref()) {
            Ok(logs) => {
                starts.push((Start::Logarithms, logs.clone()));
                seeds = Some(logs);
            }
            Err(e) => {
                init_error = Some(Error::AtGridPoint {
                    index: k,
                    source: Box::new(e),
                })
            }
        }
        if let Some(prev) = points.last().filter(|p| !p.residues.is_empty()) {
            starts.push((Start::PreviousPoint, prev.residues.clone()));
        }
        let mut point = solve_point(&problem, starts, opts);
        if point.residues.is_empty() {
            if let Some(e) = init_error {
                point.failure = Some(e);
            }
        }
        points.push(point);
    }
    Ok(RHSolution {
        poles: target.poles.clone(),
        base: target.base,
        grid: target.grid.clone(),
        integrator_tol: opts.integrator_tol,
        points,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RoundTripReport {
    /// `max_i ||M_i(B) - M_i||_F` per grid point; `None` if it could not be
    /// recomputed.
    pub deviations: Vec<Option<f64>>,
    pub max_deviation: f64,
    pub integrator_tol: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Recompute the monodromy of the solved systems with a tighter integrator
/// and compare with the targets.
pub fn rh_roundtrip_verify(sol: &RHSolution, target: &RHTarget, tol: f64) -> RoundTripReport {
    let itol = (0.1 * sol.integrator_tol).max(crate::continuation::TOL_RANGE.0);
    let plan = target.plan();
    let deviations: Vec<Option<f64>> = (0..sol.points.len())
        .into_par_iter()
        .map(|k| {
            let ns = sol.system(k).ok()?;
            let got = monodromy_numeric(&ns, &plan, itol).ok()?;
            Some(
                got.matrices
                    .iter()
                    .zip(&target.targets[k])
                    .map(|(m, t)| (m - t).norm())
                    .fold(0.0, f64::max),
            )
        })
        .collect();
    let max_deviation = deviations
        .iter()
        .map(|d| d.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    RoundTripReport {
        passed: deviations.len() == target.targets.len() && max_deviation <= tol,
        deviations,
        max_deviation,
        integrator_tol: itol,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::monodromy_rep;
    use crate::fixtures::{integer_poles, random_fuchsian_system, rng};
    use crate::linalg::{c, exp_two_pi_i};

    fn diag(v: &[Complex64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
    }

    fn poles01() -> Vec<Complex64> {
        vec![c(0.0, 0.0), c(1.0, 0.0)]
    }

    fn commuting_target() -> RHTarget {
        let grid: Vec<ParamPoint> = [0.0, 0.5].iter().map(|&t| ParamPoint::real(&[t])).collect();
        let targets = grid
            .iter()
            .map(|t| {
                let tv = t.coords()[0].re;
                let n1 = diag(&[c(0.2 + 0.1 * tv, 0.0), c(-0.3, 0.05)]);
                let m1 = exp_two_pi_i(&n1);
                vec![m1.clone(), m1.try_inverse().unwrap()]
            })
            .collect();
        RHTarget::new(poles01(), c(0.5, -1.5), grid, targets).unwrap()
    }

    #[test]
    fn identity_targets_give_the_zero_system() {
        let id = CMatrix::identity(2, 2);
        let target = RHTarget::new(poles01(), c(0.5, -1.5), vec![ParamPoint::real(&[0.0])], vec![vec![id.clone(), id]]).unwrap();
        let init = rh_initialize(&target).unwrap();
        assert!(init[0].iter().all(|n| n.norm() < 1e-14));
        let sol = rh_solve(&target, &RhOptions::default()).unwrap();
        assert!(sol.converged());
        assert_eq!(sol.points[0].iterations, 0);
        assert!(sol.points[0].residues.iter().all(|b| b.norm() < 1e-14));
        let rep = rh_roundtrip_verify(&sol, &target, 1e-12);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn commuting_targets_are_exact_at_initialization() {
        let target = commuting_target();
        let sol = rh_solve(&target, &RhOptions::default()).unwrap();
        for p in &sol.points {
            assert!(p.converged);
            assert_eq!(p.iterations, 0);
            assert!(p.fit_residual <= 1e-8);
        }
        let rep = rh_roundtrip_verify(&sol, &target, 1e-9);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn violated_product_is_rejected() {
        let m = exp_two_pi_i(&diag(&[c(0.2, 0.0), c(0.1, 0.0)]));
        let mut bad = m.clone().try_inverse().unwrap();
        bad[(0, 1)] += 0.1;
        let err = RHTarget::new(poles01(), c(0.5, -1.5), vec![ParamPoint::real(&[0.0])], vec![vec![m, bad]]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pole_order_must_follow_the_loops() {
        let id = CMatrix::identity(1, 1);
        let three = vec![c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        let err = RHTarget::new(three, c(1.0, -2.0), vec![ParamPoint::real(&[0.0])], vec![vec![id.clone(), id.clone(), id]]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn noncommuting_round_trip_at_one_point() {
        let mut g = rng(7);
        let sys = random_fuchsian_system(&mut g, 2, integer_poles(3), 0.3);
        let grid = vec![ParamPoint::real(&[0.1])];
        let ns = sys.at(&grid[0]).unwrap();
        let plan = PathPlan::default_for(&ns);
        let md = monodromy_rep(&sys, &plan, &grid, 1e-13).unwrap();
        let target = RHTarget::from_monodromy(&md, &sys).unwrap();
        let sol = rh_solve(&target, &RhOptions::default()).unwrap();
        let p = &sol.points[0];
        assert!(p.initial_residual > 1e-8, "log candidate should miss: {}", p.initial_residual);
        assert!(p.converged, "{:?}", p.failure);
        let rep = rh_roundtrip_verify(&sol, &target, 1e-6);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn json_round_trip_of_targets() {
        let target = commuting_target();
        let text = serde_json::to_string(&target.to_json()).unwrap();
        let back: RHTargetJson = serde_json::from_str(&text).unwrap();
        let t2 = back.to_target().unwrap();
        assert_eq!(t2.poles(), target.poles());
        assert!((&t2.targets()[1][0] - &target.targets()[1][0]).norm() == 0.0);
    }
}
