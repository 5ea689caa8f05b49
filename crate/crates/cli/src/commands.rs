use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use monodromy_core::continuation::{check_product_relation, monodromy_rep, PathPlan};
use monodromy_core::fixtures::{integer_poles, random_fuchsian_system, rng};
use monodromy_core::io::{complex_out, gauge_in, GridJson, RationalJson, SeriesJson, SystemJson};
use monodromy_core::normal_form::{normal_form, FuchsLocalSystem};
use monodromy_core::param::ParamPoint;
use monodromy_core::rationality::{invariance_rationality_harness, DetectOptions, Expr, HarnessOptions};
use monodromy_core::rh::{rh_roundtrip_verify, rh_solve, RHTarget, RHTargetJson, RhOptions};
use monodromy_core::systems::{classify_singularity, LinearSystem};
use monodromy_core::{Complex64, Error};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::{ClassifyArgs, Common, Format, MonodromyArgs, NormalformArgs, RationalArgs, RhArgs};

const DEFAULT_TOL: f64 = 1e-9;
const DEFAULT_RH_TOL: f64 = 1e-12;
/// Largest normal-form recurrence residual accepted by `--verify`.
const RECURRENCE_TOL: f64 = 1e-8;
/// Largest round-trip deviation accepted by `--verify`.
const ROUNDTRIP_TOL: f64 = 1e-6;

pub enum Outcome {
    Passed,
    VerificationFailed(String),
}

pub enum Failure {
    /// Unreadable or invalid input: exit code 2.
    Input(anyhow::Error),
    /// The computation itself failed: exit code 1.
    Module(anyhow::Error),
}

type Run = Result<Outcome, Failure>;

/// One JSON line on standard error.
pub fn diagnose(kind: &str, message: &str) {
    let line = json!({ "error": kind, "message": message });
    eprintln!("{line}");
}

fn is_input_error(e: &Error) -> bool {
    match e {
        Error::AtGridPoint { source, .. } => is_input_error(source),
        Error::InvalidInput(_)
        | Error::ParameterDimension { .. }
        | Error::PoleAtParameter { .. }
        | Error::PoleCollisionAtParameter { .. }
        | Error::DivisionByZeroFunction
        | Error::CenterMismatch
        | Error::InvalidLocalSystem(_) => true,
        _ => false,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_input_error(&e) {
            Failure::Input(e.into())
        } else {
            Failure::Module(e.into())
        }
    }
}

fn input_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input_err)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(input_err)
}

fn require_input(c: &Common) -> Result<&Path, Failure> {
    c.input
        .as_deref()
        .ok_or_else(|| input_err(anyhow!("--input is required")))
}

fn load_system(c: &Common) -> Result<LinearSystem, Failure> {
    let js: SystemJson = read_json(require_input(c)?)?;
    Ok(js.to_system()?)
}

/// Grid from `--grid` (JSON text or a file), or the origin.
fn load_grid(c: &Common, nparams: usize) -> Result<Vec<ParamPoint>, Failure> {
    let grid = match &c.grid {
        None => vec![ParamPoint::new(vec![Complex64::new(0.0, 0.0); nparams])],
        Some(spec) => {
            let js: GridJson = match serde_json::from_str(spec) {
                Ok(g) => g,
                Err(_) => read_json(Path::new(spec))?,
            };
            js.points()?
        }
    };
    if let Some(p) = grid.iter().find(|p| p.dim() != nparams) {
        return Err(input_err(anyhow!(
            "grid points have {} coordinates but the system has {nparams} parameters",
            p.dim()
        )));
    }
    Ok(grid)
}

fn tol_or(c: &Common, default: f64) -> f64 {
    c.tol.unwrap_or(default)
}

fn json_only(c: &Common) -> Result<(), Failure> {
    if c.format == Format::Csv {
        return Err(input_err(anyhow!("csv output is only available for monodromy")));
    }
    Ok(())
}

fn write_bytes(c: &Common, bytes: &[u8]) -> Result<(), Failure> {
    match &c.output {
        Some(p) => fs::write(p, bytes)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(input_err),
        None => std::io::stdout()
            .write_all(bytes)
            .context("writing standard output")
            .map_err(Failure::Module),
    }
}

fn write_json(c: &Common, v: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Failure::Module(e.into()))?;
    text.push('\n');
    write_bytes(c, text.as_bytes())
}

fn grid_out(grid: &[ParamPoint]) -> Value {
    json!(grid
        .iter()
        .map(|t| t.coords().iter().map(|z| complex_out(*z)).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn plan_for(path: Option<&Path>, sys: &LinearSystem, grid: &[ParamPoint]) -> Result<PathPlan, Failure> {
    match path {
        Some(p) => read_json(p),
        None => Ok(PathPlan::default_for(&sys.at(&grid[0])?)),
    }
}

pub fn classify(a: &ClassifyArgs) -> Run {
    let c = &a.common;
    json_only(c)?;
    let sys = load_system(c)?;
    let grid = load_grid(c, sys.nparams())?;
    let witness = match &a.witness {
        Some(p) => Some(gauge_in(&read_json::<SeriesJson>(p)?)?),
        None => None,
    };
    for t in &grid {
        sys.check_collisions(t)?;
    }
    let poles: Vec<Value> = sys
        .poles()
        .iter()
        .enumerate()
        .map(|(i, pole)| {
            let per: Vec<Value> = grid
                .iter()
                .map(|t| match classify_singularity(&sys, i, t, witness.as_ref()) {
                    Ok(k) => json!(k),
                    Err(e) => json!({ "error": e.to_string() }),
                })
                .collect();
            json!({
                "index": i,
                "alpha": RationalJson::from_rational(&pole.alpha),
                "order": pole.order(),
                "classification": per,
            })
        })
        .collect();
    write_json(c, &json!({ "grid": grid_out(&grid), "poles": poles }))?;
    Ok(Outcome::Passed)
}

pub fn normalform(a: &NormalformArgs) -> Run {
    let c = &a.common;
    json_only(c)?;
    if a.trunc < 1 {
        return Err(input_err(anyhow!("--trunc must be at least 1")));
    }
    let sys = load_system(c)?;
    let grid = load_grid(c, sys.nparams())?;
    let indices: Vec<usize> = match a.pole {
        Some(i) if i >= sys.poles().len() => {
            return Err(input_err(anyhow!("no pole with index {i}")));
        }
        Some(i) => vec![i],
        None => (0..sys.poles().len()).collect(),
    };
    let mut entries = Vec::new();
    let mut worst: f64 = 0.0;
    let mut failed = 0;
    for &i in &indices {
        for (k, t) in grid.iter().enumerate() {
            let r = FuchsLocalSystem::from_pole(&sys, i, a.trunc, t).and_then(|f| normal_form(&f, t, a.trunc));
            entries.push(match r {
                Ok(nf) => {
                    let res = nf.recurrence_residual();
                    worst = worst.max(res);
                    json!({ "pole": i, "grid": k, "normalForm": nf.to_json(), "recurrenceResidual": res })
                }
                Err(e) => {
                    failed += 1;
                    json!({ "pole": i, "grid": k, "error": e.to_string() })
                }
            });
        }
    }
    write_json(
        c,
        &json!({ "grid": grid_out(&grid), "truncation": a.trunc, "results": entries }),
    )?;
    if !entries.is_empty() && failed == entries.len() {
        return Err(Failure::Module(anyhow!("no pole could be brought to normal form")));
    }
    if c.verify && (failed > 0 || worst > RECURRENCE_TOL) {
        return Ok(Outcome::VerificationFailed(format!(
            "{failed} failures, recurrence residual {worst:.3e}"
        )));
    }
    Ok(Outcome::Passed)
}

pub fn monodromy(a: &MonodromyArgs) -> Run {
    let c = &a.common;
    let sys = load_system(c)?;
    let grid = load_grid(c, sys.nparams())?;
    let tol = tol_or(c, DEFAULT_TOL);
    let plan = plan_for(a.plan.as_deref(), &sys, &grid)?;
    let md = monodromy_rep(&sys, &plan, &grid, tol)?;
    if md.successes().next().is_none() {
        let why = md.results.iter().find_map(|r| r.as_ref().err()).expect("some failure");
        return Err(Failure::Module(anyhow!("no grid point succeeded: {why}")));
    }
    let deviation = if c.verify {
        Some(check_product_relation(&md, &sys)?)
    } else {
        None
    };
    match c.format {
        Format::Json => {
            let mut v = serde_json::to_value(md.to_json()).map_err(|e| Failure::Module(e.into()))?;
            if let Some(d) = deviation {
                v["productDeviation"] = json!(d);
            }
            write_json(c, &v)?;
        }
        Format::Csv => {
            let mut buf = Vec::new();
            md.write_csv(&mut buf).map_err(|e| Failure::Module(e.into()))?;
            write_bytes(c, &buf)?;
            if let Some(d) = deviation {
                eprintln!("{}", json!({ "productDeviation": d }));
            }
        }
    }
    if let Some(d) = deviation {
        let failed = md.results.iter().filter(|r| r.is_err()).count();
        let bound = product_bound(tol);
        if failed > 0 || d > bound {
            return Ok(Outcome::VerificationFailed(format!(
                "{failed} grid points failed, product deviation {d:.3e} (bound {bound:.1e})"
            )));
        }
    }
    Ok(Outcome::Passed)
}

/// Accepted `||M_1 ... M_s - M_inf^-1||` for an integrator tolerance.
fn product_bound(tol: f64) -> f64 {
    (1e4 * tol).max(1e-6)
}

fn rh_options(a: &RhArgs) -> RhOptions {
    RhOptions {
        max_iter: a.max_iter,
        tol_fit: a.fit_tol,
        integrator_tol: tol_or(&a.common, DEFAULT_RH_TOL),
        ..RhOptions::default()
    }
}

pub fn rhsolve(a: &RhArgs) -> Run {
    let c = &a.common;
    json_only(c)?;
    let js: RHTargetJson = read_json(require_input(c)?)?;
    let target = js.to_target()?;
    let sol = rh_solve(&target, &rh_options(a))?;
    let mut out = json!({ "solution": sol.to_json() });
    let report = c.verify.then(|| rh_roundtrip_verify(&sol, &target, ROUNDTRIP_TOL));
    if let Some(r) = &report {
        out["verification"] = serde_json::to_value(r).map_err(|e| Failure::Module(e.into()))?;
    }
    write_json(c, &out)?;
    if !sol.converged() {
        return Ok(Outcome::VerificationFailed("the fit did not converge at every grid point".into()));
    }
    match report {
        Some(r) if !r.passed => Ok(Outcome::VerificationFailed(format!(
            "round-trip deviation {:.3e}",
            r.max_deviation
        ))),
        _ => Ok(Outcome::Passed),
    }
}

pub fn roundtrip(a: &RhArgs) -> Run {
    let c = &a.common;
    json_only(c)?;
    let sys = match &c.input {
        Some(_) => load_system(c)?,
        None => random_fuchsian_system(&mut rng(c.seed), 2, integer_poles(3), 0.3),
    };
    let grid = match &c.grid {
        Some(_) => load_grid(c, sys.nparams())?,
        None => [-0.1, 0.0, 0.1]
            .iter()
            .map(|&t| ParamPoint::new(vec![Complex64::new(t, 0.0); sys.nparams()]))
            .collect(),
    };
    let opts = rh_options(a);
    let plan = plan_for(None, &sys, &grid)?;
    let md = monodromy_rep(&sys, &plan, &grid, opts.integrator_tol.max(1e-13))?;
    if let Some((k, e)) = md.results.iter().enumerate().find_map(|(k, r)| r.as_ref().err().map(|e| (k, e))) {
        return Err(Failure::Module(anyhow!("forward monodromy failed at grid point {k}: {e}")));
    }
    let target = RHTarget::from_monodromy(&md, &sys)?;
    let sol = rh_solve(&target, &opts)?;
    let report = rh_roundtrip_verify(&sol, &target, ROUNDTRIP_TOL);
    let out = json!({
        "seed": c.seed,
        "system": SystemJson::from_system(&sys),
        "target": target.to_json(),
        "solution": sol.to_json(),
        "verification": report,
    });
    write_json(c, &out)?;
    if !sol.converged() || !report.passed {
        return Ok(Outcome::VerificationFailed(format!(
            "converged: {}, round-trip deviation {:.3e}",
            sol.converged(),
            report.max_deviation
        )));
    }
    Ok(Outcome::Passed)
}

pub fn rational(a: &RationalArgs) -> Run {
    let c = &a.common;
    json_only(c)?;
    let candidate = Expr::parse(&a.candidate)?;
    let sys = load_system(c)?;
    let grid = load_grid(c, sys.nparams())?;
    let plan = plan_for(a.plan.as_deref(), &sys, &grid)?;
    let md = monodromy_rep(&sys, &plan, &grid, tol_or(c, DEFAULT_TOL))?;
    let opts = HarnessOptions {
        detect: DetectOptions {
            m_max: a.m_max,
            seed: c.seed,
            ..DetectOptions::default()
        },
        ..HarnessOptions::default()
    };
    let report = invariance_rationality_harness(&sys, &md, &candidate, &opts)?;
    let out = json!({
        "seed": c.seed,
        "candidate": a.candidate,
        "grid": grid_out(&grid),
        "report": report,
    });
    write_json(c, &out)?;
    if c.verify && !(report.invariant && report.rational == Some(true)) {
        return Ok(Outcome::VerificationFailed(format!(
            "invariant: {}, rational: {:?}",
            report.invariant, report.rational
        )));
    }
    Ok(Outcome::Passed)
}
