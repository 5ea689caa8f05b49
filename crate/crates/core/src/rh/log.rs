//! Matrix logarithms `N = log(M) / (2 pi i)` with branch tracking.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, logm_with_branches};
use crate::{CMatrix, Complex64};

/// Relative distance to the cut below which an unseeded logarithm is refused.
pub const CUT_BAND: f64 = 1e-8;
/// Relative distance treated as lying exactly on the cut (argument `pi`).
const ON_CUT: f64 = 1e-14;

fn two_pi_i() -> Complex64 {
    Complex64::new(0.0, TAU)
}

/// `N` with `exp(2 pi i N) = M`.
///
/// Without `seed` the principal branch is used (arguments in `(-pi, pi]`).
/// With `seed`, each eigenvalue cluster of `M` takes the branch of `log`
/// closest to `2 pi i nu`, where `nu` is the seed eigenvalue whose
/// exponential is nearest.
pub fn matrix_log_tracked(m: &CMatrix, seed: Option<&CMatrix>) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput("matrix logarithm of a non-square matrix".into()));
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    if let Some(s) = seed {
        if s.shape() != m.shape() {
            return Err(Error::InvalidInput("seed and matrix differ in size".into()));
        }
    }
    let scale = m.norm();
    if eigenvalues(m).iter().any(|z| z.norm() <= 1e-14 * scale) {
        return Err(Error::SingularMatrix);
    }
    let seeds = seed.map(eigenvalues);
    let branch = |mu: Complex64| -> Result<Complex64> {
        let p = mu.ln();
        match &seeds {
            None => {
                let off = mu.im.abs() / mu.norm();
                if mu.re < 0.0 && off <= ON_CUT {
                    Ok(Complex64::new(p.re, PI))
                } else if mu.re < 0.0 && off <= CUT_BAND {
                    Err(Error::BranchAmbiguity {
                        eigenvalue: [mu.re, mu.im],
                    })
                } else {
                    Ok(p)
                }
            }
            Some(nus) => {
                let nu = nus
                    .iter()
                    .min_by(|a, b| {
                        let da = ((two_pi_i() * *a).exp() - mu).norm();
                        let db = ((two_pi_i() * *b).exp() - mu).norm();
                        da.total_cmp(&db)
                    })
                    .expect("nonempty spectrum");
                let k = ((TAU * nu.re - p.im) / TAU).round();
                Ok(Complex64::new(p.re, p.im + TAU * k))
            }
        }
    };
    Ok(logm_with_branches(m, branch)? / two_pi_i())
}

/// Estimated Lipschitz constant of `M -> N` near `(m, n)`: the spectral norm
/// of the Frechet derivative of the tracked logarithm, by finite differences.
pub fn log_lipschitz(m: &CMatrix, n: &CMatrix) -> Result<f64> {
    let d = m.nrows();
    let h = 1e-7 * m.norm().max(1.0);
    let mut k = nalgebra::DMatrix::<Complex64>::zeros(d * d, d * d);
    for col in 0..d * d {
        let mut e = CMatrix::zeros(d, d);
        e[(col % d, col / d)] = Complex64::new(h, 0.0);
        let nn = matrix_log_tracked(&(m + e), Some(n))?;
        let diff = (nn - n) / Complex64::new(h, 0.0);
        for (r, z) in diff.iter().enumerate() {
            k[(r, col)] = *z;
        }
    }
    Ok(k.singular_values().max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, exp_two_pi_i};

    fn diag(v: &[Complex64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn reference_logs() {
        let id = CMatrix::identity(2, 2);
        assert!(matrix_log_tracked(&id, None).unwrap().norm() < 1e-15);
        let n = matrix_log_tracked(&-id.clone(), None).unwrap();
        assert!((n - &id * c(0.5, 0.0)).norm() < 1e-14);
        let want = diag(&[c(0.3, 0.0), c(0.4, 0.0)]);
        let n = matrix_log_tracked(&exp_two_pi_i(&want), None).unwrap();
        assert!((n - want).norm() < 1e-12);
    }

    #[test]
    fn near_the_cut_needs_a_seed() {
        let m = diag(&[Complex64::from_polar(1.0, -PI + 1e-10), c(1.0, 0.0)]);
        assert!(matches!(matrix_log_tracked(&m, None), Err(Error::BranchAmbiguity { .. })));
        let seed = diag(&[c(0.5, 0.0), c(0.0, 0.0)]);
        let n = matrix_log_tracked(&m, Some(&seed)).unwrap();
        assert!((n[(0, 0)] - c(0.5 + 1e-10 / TAU, 0.0)).norm() < 1e-12);
        assert!((exp_two_pi_i(&n) - m).norm() < 1e-10);
    }

    #[test]
    fn seed_selects_the_branch() {
        let want = diag(&[c(1.3, 0.1), c(-2.4, 0.0)]);
        let m = exp_two_pi_i(&want);
        let n = matrix_log_tracked(&m, Some(&(&want + diag(&[c(0.05, 0.0), c(-0.1, 0.0)])))).unwrap();
        assert!((n - want).norm() < 1e-10);
    }

    #[test]
    fn singular_input() {
        let m = diag(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(matrix_log_tracked(&m, None).unwrap_err(), Error::SingularMatrix);
    }

    #[test]
    fn lipschitz_of_the_identity_is_one_over_two_pi() {
        let id = CMatrix::identity(2, 2);
        let k = log_lipschitz(&id, &CMatrix::zeros(2, 2)).unwrap();
        assert!((k - 1.0 / TAU).abs() < 1e-5);
    }
}
