//! Local fundamental solutions `Y = (sum_{i >= i0} u^i Q_i) u^A~`.

use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::param::ParamPoint;
use crate::series::NumericSeries;
use crate::systems::LinearSystem;
use crate::{CMatrix, Complex64};

use super::shear::shear_numeric;
use super::{normal_form, FuchsLocalSystem, NormalFormResult};

/// A fundamental solution near `center`, at a fixed parameter point.
#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub t: ParamPoint,
    pub center: Complex64,
    /// Series part `Q = T^-1 P^-1`.
    pub q: NumericSeries,
    pub atilde: CMatrix,
    pub normal_form: NormalFormResult,
}

/// Local solution of `f` at `t` with series part known through order `n`
/// of the reduction.
pub fn local_solution(f: &FuchsLocalSystem, t: &ParamPoint, n: i64) -> Result<LocalSolution> {
    let nf = normal_form(f, t, n)?;
    let pinv = nf.p.invert_to(t, n)?;
    let q = nf.shear.gauge_inv.mul(&pinv)?;
    Ok(LocalSolution {
        t: t.clone(),
        center: *nf.p.center(),
        q,
        atilde: nf.atilde.clone(),
        normal_form: nf,
    })
}

impl LocalSolution {
    /// Local solution at a simple pole of `sys`, localizing deep enough to
    /// absorb the truncation lost to shearing.
    pub fn at_pole(sys: &LinearSystem, index: usize, t: &ParamPoint, n: i64) -> Result<Self> {
        let pole = sys
            .poles()
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("no pole with index {index}")))?;
        let residue = pole.principal.last().expect("nonempty").eval(t)?;
        let probe = NumericSeries::exact(
            Complex64::new(0.0, 0.0),
            0,
            vec![crate::param::Mat::from_dmatrix(&residue)],
        )?;
        let loss = shear_numeric(&probe)?.unit_steps() as i64;
        let f = FuchsLocalSystem::from_pole(sys, index, n + loss, t)?;
        local_solution(&f, t, n)
    }

    fn u(&self, x: Complex64) -> Result<Complex64> {
        let u = x - self.center;
        if u.norm() == 0.0 {
            return Err(Error::SampleAtSingularity { x: [x.re, x.im] });
        }
        Ok(u)
    }

    /// `u^A~` on the principal branch of `log u`.
    pub fn power(&self, x: Complex64) -> Result<CMatrix> {
        Ok(expm(&(&self.atilde * self.u(x)?.ln())))
    }

    pub fn eval(&self, x: Complex64) -> Result<CMatrix> {
        Ok(self.q.eval(x, &self.t)? * self.power(x)?)
    }

    /// `dY/dx = (Q' + Q A~ / u) u^A~`.
    pub fn eval_derivative(&self, x: Complex64) -> Result<CMatrix> {
        let u = self.u(x)?;
        let q = self.q.eval(x, &self.t)?;
        let dq = self.q.derivative().eval(x, &self.t)?;
        Ok((dq + q * &self.atilde / u) * self.power(x)?)
    }

    /// One positive turn around the center multiplies `Y` on the right by this.
    pub fn local_monodromy(&self) -> CMatrix {
        crate::linalg::exp_two_pi_i(&self.atilde)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::worked_example as gauge_worked_example;
    use crate::linalg::c;

    #[test]
    fn simple_worked_system_has_closed_form_solution() {
        let (_, b, _) = gauge_worked_example();
        let t = ParamPoint::real(&[0.5]);
        let sol = LocalSolution::at_pole(&b, 0, &t, 10).unwrap();
        let x = c(0.5 + 0.3, 0.2);
        let want = (x - c(0.5, 0.0)).powc(c(-0.5, 0.0));
        let y = sol.eval(x).unwrap();
        assert!((y - CMatrix::identity(2, 2) * want).norm() < 1e-13);
        assert!((sol.local_monodromy() + CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn solution_satisfies_the_equation() {
        let a0 =
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(0.5, 0.0)]));
        let id = CMatrix::identity(2, 2);
        let f =
            FuchsLocalSystem::from_matrices(c(0.0, 0.0), &[a0.clone(), id.clone()], true).unwrap();
        let t = ParamPoint::real(&[0.0]);
        let sol = local_solution(&f, &t, 20).unwrap();
        let x = c(0.1, 0.0);
        let y = sol.eval(x).unwrap();
        let dy = sol.eval_derivative(x).unwrap();
        let rhs = (&a0 + &id * x) * &y / x;
        assert!((&dy - &rhs).norm() / rhs.norm() < 1e-9);
    }

    #[test]
    fn resonant_residue_is_sheared_first() {
        // delta Y = (diag(0, 1) + u B) Y
        let a0 =
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let mut b = CMatrix::zeros(2, 2);
        b[(0, 1)] = c(0.4, 0.0);
        b[(1, 0)] = c(0.3, -0.1);
        let f =
            FuchsLocalSystem::from_matrices(c(0.0, 0.0), &[a0.clone(), b.clone()], true).unwrap();
        let t = ParamPoint::real(&[0.0]);
        let sol = local_solution(&f, &t, 25).unwrap();
        assert_eq!(sol.normal_form.shear.steps.len(), 1);
        for x in [c(0.05, 0.02), c(-0.04, 0.03)] {
            let y = sol.eval(x).unwrap();
            let dy = sol.eval_derivative(x).unwrap();
            let rhs = (&a0 + &b * x) * &y / x;
            assert!((&dy - &rhs).norm() / rhs.norm() < 1e-9);
        }
    }
}
