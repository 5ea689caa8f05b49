//! Global rational systems `dY/dx = A(x, t) Y`, their local expansions,
//! gauge transformations and singularity classification.

mod classify;
pub(crate) mod expand;
mod gauge;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::param::{Coeff, Mat, ParamMatrix, ParamPoint, ParamRational};
use crate::series::{NumericSeries, ParamSeries};
use crate::{CMatrix, Complex64};

pub use classify::{classify_singularity, deepest_vanishes_at, Classification};
pub use gauge::{apply_gauge, apply_gauge_delta, verify_gauge, verify_gauge_local, GaugeTransform};

use expand::{power_expansion, Accumulator, At};

/// Relative distance below which two pole locations are considered equal.
pub const COLLISION_EPS: f64 = 1e-10;

/// A pole at `x = alpha(t)` with principal part
/// `sum_k principal[k] / (x - alpha)^(m - k)`, deepest order first.
#[derive(Clone, Debug, PartialEq)]
pub struct Pole {
    pub alpha: ParamRational,
    pub principal: Vec<ParamMatrix>,
}

impl Pole {
    pub fn order(&self) -> usize {
        self.principal.len()
    }

    /// A simple pole `residue / (x - alpha)`.
    pub fn simple(alpha: ParamRational, residue: ParamMatrix) -> Self {
        Pole {
            alpha,
            principal: vec![residue],
        }
    }
}

/// Coefficient matrix `A(x, t)`: principal parts at finitely many moving
/// poles plus a polynomial tail `sum_j tail[j] x^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    n: usize,
    nparams: usize,
    poles: Vec<Pole>,
    tail: Vec<ParamMatrix>,
}

impl LinearSystem {
    pub fn new(n: usize, nparams: usize, poles: Vec<Pole>, tail: Vec<ParamMatrix>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        for (i, p) in poles.iter().enumerate() {
            if p.principal.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "pole {i} has an empty principal part"
                )));
            }
            if p.principal.iter().any(|m| m.n() != n) {
                return Err(Error::InvalidInput(format!(
                    "pole {i} has a coefficient of the wrong size"
                )));
            }
            if p.principal[0].is_zero() {
                return Err(Error::InvalidInput(format!(
                    "deepest coefficient of pole {i} is identically zero"
                )));
            }
            if p.alpha.nvars() > nparams {
                return Err(Error::InvalidInput(format!(
                    "pole {i} uses more than {nparams} parameters"
                )));
            }
        }
        if tail.iter().any(|m| m.n() != n) {
            return Err(Error::InvalidInput(
                "tail coefficient of the wrong size".into(),
            ));
        }
        let sys = LinearSystem {
            n,
            nparams,
            poles,
            tail,
        };
        sys.check_distinct_poles()?;
        Ok(sys)
    }

    /// The system `sum_i residues[i] / (x - alphas[i])`.
    pub fn fuchsian(
        nparams: usize,
        alphas: Vec<ParamRational>,
        residues: Vec<ParamMatrix>,
    ) -> Result<Self> {
        let n = residues.first().map_or(1, Mat::n);
        let poles = alphas
            .into_iter()
            .zip(residues)
            .map(|(a, r)| Pole::simple(a, r))
            .collect();
        LinearSystem::new(n, nparams, poles, Vec::new())
    }

    /// `A = 0`.
    pub fn zero(n: usize, nparams: usize) -> Self {
        LinearSystem {
            n,
            nparams,
            poles: Vec::new(),
            tail: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nparams(&self) -> usize {
        self.nparams
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn tail(&self) -> &[ParamMatrix] {
        &self.tail
    }

    /// Pole locations must differ as functions of `t`; checked at five
    /// pseudo-random parameter points.
    fn check_distinct_poles(&self) -> Result<()> {
        for i in 0..self.poles.len() {
            for j in (i + 1)..self.poles.len() {
                if same_function(&self.poles[i].alpha, &self.poles[j].alpha, self.nparams) {
                    return Err(Error::PoleCollisionAtParameter {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(())
    }

    /// Index of the pole located at `alpha` (as a function of `t`).
    pub fn pole_index_at(&self, alpha: &ParamRational) -> Option<usize> {
        self.poles
            .iter()
            .position(|p| same_function(&p.alpha, alpha, self.nparams))
    }

    pub fn pole_locations(&self, t: &ParamPoint) -> Result<Vec<Complex64>> {
        self.poles.iter().map(|p| p.alpha.eval(t)).collect()
    }

    /// Fails with `PoleCollisionAtParameter` when two poles coincide at `t`.
    pub fn check_collisions(&self, t: &ParamPoint) -> Result<Vec<Complex64>> {
        let locs = self.pole_locations(t)?;
        for i in 0..locs.len() {
            for j in (i + 1)..locs.len() {
                if (locs[i] - locs[j]).norm() <= COLLISION_EPS * (1.0 + locs[i].norm()) {
                    return Err(Error::PoleCollisionAtParameter {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(locs)
    }

    /// All coefficient data evaluated at `t`.
    pub fn at(&self, t: &ParamPoint) -> Result<NumericSystem> {
        let locs = self.check_collisions(t)?;
        let poles = self
            .poles
            .iter()
            .zip(locs)
            .map(|(p, a)| {
                Ok((
                    a,
                    p.principal
                        .iter()
                        .map(|m| m.eval(t))
                        .collect::<Result<Vec<_>>>()?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = self
            .tail
            .iter()
            .map(|m| m.eval(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(NumericSystem {
            n: self.n,
            poles,
            tail,
        })
    }

    /// `A(x, t)`.
    pub fn eval(&self, x: Complex64, t: &ParamPoint) -> Result<CMatrix> {
        self.at(t)?.eval(x)
    }

    /// Symbolic Laurent expansion of `A` at pole `index`, through order `order`.
    /// Other poles and the tail are Taylor-expanded.
    pub fn localize(&self, index: usize, order: i64, t: &ParamPoint) -> Result<ParamSeries> {
        let pole = self
            .poles
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("no pole with index {index}")))?;
        let m = pole.order() as i64;
        if order < -m {
            return Err(Error::InvalidInput(format!(
                "truncation {order} is below the pole order -{m}"
            )));
        }
        self.check_collisions(t)?;
        self.expand_symbolic(&At::Finite(pole.alpha.clone()), Some(index), order)
    }

    /// Numeric Laurent expansion at pole `index` for fixed `t`.
    pub fn localize_at(&self, index: usize, order: i64, t: &ParamPoint) -> Result<NumericSeries> {
        let num = self.at(t)?;
        let center = *num
            .poles
            .get(index)
            .map(|(a, _)| a)
            .ok_or_else(|| Error::InvalidInput(format!("no pole with index {index}")))?;
        num.expand(center, Some(index), order)
    }

    /// Expansion of `A` at `at` (finite point or infinity). `own` marks the
    /// pole sitting at `at`, if any.
    pub(crate) fn expand_symbolic(
        &self,
        at: &At<ParamRational>,
        own: Option<usize>,
        order: i64,
    ) -> Result<ParamSeries> {
        let poles: Vec<(ParamRational, Vec<ParamMatrix>)> = self
            .poles
            .iter()
            .map(|p| (p.alpha.clone(), p.principal.clone()))
            .collect();
        expand_generic(self.n, &poles, &self.tail, at, own, order)
    }
}

/// Five fixed pseudo-random parameter points used for identity tests.
pub(crate) fn sample_points(nparams: usize) -> Vec<ParamPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..5)
        .map(|_| {
            ParamPoint::new(
                (0..nparams)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
            )
        })
        .collect()
}

/// Two functions of `t` agree: structurally, or at every sample point.
pub(crate) fn same_function(a: &ParamRational, b: &ParamRational, nparams: usize) -> bool {
    if a == b {
        return true;
    }
    let mut evaluated = false;
    for t in sample_points(nparams.max(a.nvars()).max(b.nvars())) {
        if let (Ok(x), Ok(y)) = (a.eval(&t), b.eval(&t)) {
            evaluated = true;
            if (x - y).norm() > COLLISION_EPS * (1.0 + x.norm()) {
                return false;
            }
        }
    }
    evaluated
}

/// A system with the parameters fixed.
#[derive(Clone, Debug)]
pub struct NumericSystem {
    n: usize,
    poles: Vec<(Complex64, Vec<CMatrix>)>,
    tail: Vec<CMatrix>,
}

impl NumericSystem {
    /// `sum_i B_i / (x - a_i)` with constant poles and residues.
    pub fn fuchsian(poles: &[Complex64], residues: &[CMatrix]) -> Result<Self> {
        let n = residues.first().map_or(0, |m| m.nrows());
        if poles.len() != residues.len()
            || residues.iter().any(|m| m.nrows() != n || m.ncols() != n)
        {
            return Err(Error::InvalidInput(
                "one square residue of common size per pole".into(),
            ));
        }
        for i in 0..poles.len() {
            for j in (i + 1)..poles.len() {
                if (poles[i] - poles[j]).norm() <= COLLISION_EPS {
                    return Err(Error::PoleCollisionAtParameter {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(NumericSystem {
            n,
            poles: poles
                .iter()
                .zip(residues)
                .map(|(a, b)| (*a, vec![b.clone()]))
                .collect(),
            tail: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pole_locations(&self) -> Vec<Complex64> {
        self.poles.iter().map(|(a, _)| *a).collect()
    }

    pub fn eval(&self, x: Complex64) -> Result<CMatrix> {
        let mut acc = CMatrix::zeros(self.n, self.n);
        for (a, principal) in &self.poles {
            let u = x - a;
            if u.norm() <= 1e-14 * (1.0 + x.norm()) {
                return Err(Error::SampleAtSingularity { x: [x.re, x.im] });
            }
            let inv = u.inv();
            let m = principal.len() as i32;
            for (k, c) in principal.iter().enumerate() {
                acc += c * inv.powi(m - k as i32);
            }
        }
        let mut xp = Complex64::new(1.0, 0.0);
        for c in &self.tail {
            acc += c * xp;
            xp *= x;
        }
        Ok(acc)
    }

    /// `A(x)` into a preallocated buffer; the integrator's hot path.
    pub fn eval_into(&self, x: Complex64, out: &mut CMatrix) {
        out.fill(Complex64::new(0.0, 0.0));
        for (a, principal) in &self.poles {
            let inv = (x - a).inv();
            let m = principal.len() as i32;
            for (k, c) in principal.iter().enumerate() {
                let s = inv.powi(m - k as i32);
                out.zip_apply(c, |o, v| *o += v * s);
            }
        }
        let mut xp = Complex64::new(1.0, 0.0);
        for c in &self.tail {
            out.zip_apply(c, |o, v| *o += v * xp);
            xp *= x;
        }
    }

    /// Laurent (or Taylor) expansion around `center` through `order`.
    pub fn expand(
        &self,
        center: Complex64,
        own: Option<usize>,
        order: i64,
    ) -> Result<NumericSeries> {
        let poles: Vec<(Complex64, Vec<Mat<Complex64>>)> = self
            .poles
            .iter()
            .map(|(a, p)| (*a, p.iter().map(Mat::from_dmatrix).collect()))
            .collect();
        let tail: Vec<Mat<Complex64>> = self.tail.iter().map(Mat::from_dmatrix).collect();
        expand_generic(self.n, &poles, &tail, &At::Finite(center), own, order)
    }

    /// Distance from `x` to the nearest pole.
    pub fn clearance(&self, x: Complex64) -> f64 {
        self.poles
            .iter()
            .map(|(a, _)| (x - a).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Sum of residues.
    pub fn residue_sum(&self) -> CMatrix {
        let mut s = CMatrix::zeros(self.n, self.n);
        for (_, p) in &self.poles {
            s += p.last().expect("nonempty principal part");
        }
        s
    }

    /// `x = infinity` is an ordinary point: `A = O(x^-2)`.
    pub fn infinity_is_regular(&self) -> bool {
        let scale = self
            .poles
            .iter()
            .flat_map(|(_, p)| p.last())
            .map(|m| m.norm())
            .fold(0.0, f64::max);
        self.tail.iter().all(|m| m.norm() == 0.0)
            && self.residue_sum().norm() <= 1e-12 * scale.max(1e-300)
    }
}

fn expand_generic<E: Coeff>(
    n: usize,
    poles: &[(E, Vec<Mat<E>>)],
    tail: &[Mat<E>],
    at: &At<E>,
    own: Option<usize>,
    order: i64,
) -> Result<crate::series::MatrixLaurentSeries<E>> {
    let low = match (at, own) {
        (At::Finite(_), Some(i)) => -(poles[i].1.len() as i64),
        (At::Finite(_), None) => 0,
        (At::Infinity, _) => -(tail.len() as i64 - 1).max(0),
    };
    let mut acc = Accumulator::new(n, low.min(order), order);
    let mut exact = true;
    for (i, (alpha, principal)) in poles.iter().enumerate() {
        let same = own == Some(i);
        if !same {
            exact = false;
        }
        let m = principal.len() as i64;
        for (k, coeff) in principal.iter().enumerate() {
            let (l, v) = power_expansion(alpha, -(m - k as i64), at, same, order)?;
            acc.add_scaled(coeff, l, &v);
        }
    }
    let zero = E::zero();
    for (j, coeff) in tail.iter().enumerate() {
        let (l, v) = power_expansion(
            &zero,
            j as i64,
            at,
            matches!(at, At::Finite(a) if a.is_zero()),
            order,
        )?;
        acc.add_scaled(coeff, l, &v);
    }
    if matches!(at, At::Infinity) {
        exact = poles.is_empty();
    }
    let center = match at {
        At::Finite(a) => a.clone(),
        At::Infinity => E::zero(),
    };
    Ok(acc.finish(center, exact && order >= tail.len() as i64 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: &[&[f64]]) -> ParamMatrix {
        Mat::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| ParamRational::real(v)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_pole_localizes_to_itself() {
        let b0 = cm(&[&[1.0, 2.0], &[0.0, -1.0]]);
        let sys = LinearSystem::fuchsian(1, vec![ParamRational::zero()], vec![b0.clone()]).unwrap();
        let s = sys.localize(0, 2, &ParamPoint::real(&[0.0])).unwrap();
        assert_eq!(s.low_order(), -1);
        assert_eq!(s.coeff(-1).unwrap(), &b0);
        assert!(s.coeff(0).unwrap().is_zero());
    }

    #[test]
    fn other_pole_is_taylor_expanded() {
        // B1/(x - 1) at 0 = -B1 (1 + x + x^2)
        let b1 = cm(&[&[1.0, 0.5], &[0.25, 2.0]]);
        let sys = LinearSystem::fuchsian(
            1,
            vec![ParamRational::zero(), ParamRational::one()],
            vec![cm(&[&[1.0, 0.0], &[0.0, 1.0]]), b1.clone()],
        )
        .unwrap();
        let t = ParamPoint::real(&[0.0]);
        let s = sys.localize(0, 2, &t).unwrap();
        for k in 0..=2 {
            let got = s.coeff(k).unwrap().eval(&t).unwrap();
            let want = -b1.eval(&t).unwrap();
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn duplicate_poles_rejected() {
        let r = cm(&[&[1.0]]);
        let err = LinearSystem::fuchsian(
            1,
            vec![ParamRational::var(0), ParamRational::var(0)],
            vec![r.clone(), r],
        )
        .unwrap_err();
        assert!(matches!(err, Error::PoleCollisionAtParameter { .. }));
    }

    #[test]
    fn collision_at_a_parameter_value() {
        let r = cm(&[&[1.0]]);
        let sys = LinearSystem::fuchsian(
            1,
            vec![ParamRational::var(0), ParamRational::one()],
            vec![r.clone(), r],
        )
        .unwrap();
        assert!(matches!(
            sys.localize(0, 3, &ParamPoint::real(&[1.0])),
            Err(Error::PoleCollisionAtParameter { .. })
        ));
        assert!(sys.localize(0, 3, &ParamPoint::real(&[0.5])).is_ok());
    }

    #[test]
    fn numeric_and_symbolic_localization_agree() {
        let t = ParamPoint::real(&[0.3]);
        let a = &ParamRational::var(0) + &ParamRational::real(1.0);
        let sys = LinearSystem::new(
            2,
            1,
            vec![
                Pole {
                    alpha: ParamRational::var(0),
                    principal: vec![
                        cm(&[&[0.0, 1.0], &[0.0, 0.0]]),
                        cm(&[&[0.2, 0.0], &[0.1, -0.3]]),
                    ],
                },
                Pole::simple(a, cm(&[&[0.5, 0.1], &[0.0, 0.2]])),
            ],
            vec![
                cm(&[&[0.0, 0.0], &[1.0, 0.0]]),
                cm(&[&[0.3, 0.0], &[0.0, 0.0]]),
            ],
        )
        .unwrap();
        let sym = sys.localize(0, 6, &t).unwrap().at(&t).unwrap();
        let num = sys.localize_at(0, 6, &t).unwrap();
        assert_eq!(sym.low_order(), num.low_order());
        for (a, b) in sym.dense_coeffs().iter().zip(num.dense_coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
        // and the truncated sum reproduces A near the pole
        let x = Complex64::new(0.3 + 0.05, 0.02);
        let direct = sys.eval(x, &t).unwrap();
        let series = num.eval(x, &t).unwrap();
        assert!((&direct - series).norm() / direct.norm() < 1e-8);
    }
}
