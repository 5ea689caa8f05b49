use std::f64::consts::PI;

use proptest::prelude::*;

use monodromy_core::continuation::{monodromy_numeric, PathPlan};
use monodromy_core::fixtures::{
    integer_poles, planted_gap_system, random_fuchsian_system, random_local_system, random_matrix,
    rng,
};
use monodromy_core::linalg::{eigenvalues, exp_two_pi_i};
use monodromy_core::normal_form::{normal_form, shearing};
use monodromy_core::param::{Mat, ParamPoint, ParamRational, Poly};
use monodromy_core::rationality::{
    detect_rational_in_x, wronskian, DetectOptions, RationalVerdict, SampledFunction,
};
use monodromy_core::rh::matrix_log_tracked;
use monodromy_core::series::NumericSeries;
use monodromy_core::{CMatrix, Complex64};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| c(a, b))
}

/// `(a + b t) / (1 + e t)` with `|e| <= 0.5`, so no pole for `|t| < 1`.
fn coefficient() -> impl Strategy<Value = ParamRational> {
    (complex(1.0), complex(1.0), complex(0.35)).prop_map(|(a, b, e)| {
        let num = Poly::constant(a).add(&Poly::var(0).scale(b));
        let den = Poly::constant(c(1.0, 0.0)).add(&Poly::var(0).scale(e));
        ParamRational::new(num, den).unwrap()
    })
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_arithmetic_evaluates_pointwise(p in coefficient(), q in coefficient(), t in -0.9..0.9f64) {
        let at = ParamPoint::real(&[t]);
        let (pv, qv) = (p.eval(&at).unwrap(), q.eval(&at).unwrap());
        prop_assert!(close((&p + &q).eval(&at).unwrap(), pv + qv, 1e-12));
        prop_assert!(close((&p * &q).eval(&at).unwrap(), pv * qv, 1e-12));
        prop_assert!(close((&p - &q).eval(&at).unwrap(), pv - qv, 1e-12));
        if qv.norm() > 1e-3 {
            prop_assert!(close((&p / &q).unwrap().eval(&at).unwrap(), pv / qv, 1e-9));
        }
    }

    #[test]
    fn series_times_inverse_is_identity(seed in any::<u64>(), n in 1usize..4, len in 1usize..5) {
        let mut r = rng(seed);
        let mut coeffs = vec![CMatrix::identity(n, n) + random_matrix(&mut r, n, 0.5)];
        for _ in 1..len {
            coeffs.push(random_matrix(&mut r, n, 1.0));
        }
        let s = NumericSeries::exact(c(0.0, 0.0), 0, coeffs.iter().map(Mat::from_dmatrix).collect())
            .unwrap()
            .padded(8);
        let t = ParamPoint::real(&[]);
        let prod = s.mul(&s.invert(&t).unwrap()).unwrap();
        for i in 0..=8 {
            let want = if i == 0 { CMatrix::identity(n, n) } else { CMatrix::zeros(n, n) };
            prop_assert!((prod.coeff_or_zero(i).to_dmatrix() - want).norm() < 1e-9);
        }
    }

    #[test]
    fn principal_log_inverts_exponential(seed in any::<u64>(), n in 1usize..5) {
        // spectrum of N well inside the strip |Re| < 1/2
        let nmat = random_matrix(&mut rng(seed), n, 0.4);
        let m = exp_two_pi_i(&nmat);
        let back = matrix_log_tracked(&m, None).unwrap();
        prop_assert!((&back - &nmat).norm() < 1e-9, "{}", (&back - &nmat).norm());
        prop_assert!((exp_two_pi_i(&back) - m).norm() < 1e-10);
    }

    #[test]
    fn tracked_log_follows_the_seed_branch(theta in 0.0..1.0f64, k in -2i32..3) {
        // the seed sits k sheets away; the tracked log lands on that sheet
        let nu = c(theta + k as f64, 0.0);
        let m = CMatrix::from_element(1, 1, (c(0.0, 2.0 * PI) * c(theta, 0.0)).exp());
        let seed = CMatrix::from_element(1, 1, nu + c(0.01, 0.0));
        let got = matrix_log_tracked(&m, Some(&seed)).unwrap()[(0, 0)];
        prop_assert!((got - nu).norm() < 1e-10);
    }

    #[test]
    fn wronskian_is_alternating(
        a in proptest::collection::vec(complex(1.0), 4),
        b in proptest::collection::vec(complex(1.0), 4),
        x in complex(0.8),
        s in complex(2.0),
    ) {
        let t = ParamPoint::real(&[0.0]);
        let f = || SampledFunction::polynomial(a.clone());
        let g = || SampledFunction::polynomial(b.clone());
        let w = wronskian(&[f(), g()], x, &t).unwrap();
        let swapped = wronskian(&[g(), f()], x, &t).unwrap();
        prop_assert!(close(w, -swapped, 1e-12));
        prop_assert!(wronskian(&[f(), f()], x, &t).unwrap().norm() < 1e-12 * (1.0 + w.norm()));
        let scaled = SampledFunction::polynomial(a.iter().map(|z| z * s).collect());
        prop_assert!(close(wronskian(&[scaled, g()], x, &t).unwrap(), s * w, 1e-12));
    }

    #[test]
    fn sampled_derivatives_match_differences(
        num in proptest::collection::vec(coefficient(), 1..4),
        den in proptest::collection::vec(coefficient(), 1..4),
        t in -0.5..0.5f64,
        x in complex(1.0),
    ) {
        let f = SampledFunction::rational(num, den.clone(), 0.1);
        let tp = ParamPoint::real(&[t]);
        let d: Complex64 = den.iter().rev().fold(c(0.0, 0.0), |acc, q| acc * x + q.eval(&tp).unwrap());
        prop_assume!(d.norm() > 0.2);
        prop_assert!(f.derivative_mismatch(x, &tp, 1e-5).unwrap() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduction_satisfies_its_recurrence(seed in any::<u64>(), n in 1usize..5, t in -0.5..0.5f64) {
        let f = random_local_system(&mut rng(seed), n, 3);
        let nf = normal_form(&f, &ParamPoint::real(&[t]), 12).unwrap();
        prop_assert!(nf.recurrence_residual() < 1e-12);
        prop_assert_eq!(nf.p.coeff_or_zero(0).to_dmatrix(), CMatrix::identity(n, n));
    }

    #[test]
    fn shearing_shifts_the_trace_by_its_exponents(seed in any::<u64>(), n in 2usize..5) {
        let (f, _) = planted_gap_system(&mut rng(seed), n, 2);
        let t = ParamPoint::real(&[0.0]);
        let sh = shearing(&f, &t).unwrap();
        let before = f.at(&t).unwrap().coeff_or_zero(0).to_dmatrix().trace();
        let after = sh.series.coeff_or_zero(0).to_dmatrix();
        let total: u32 = sh.exponents.iter().sum();
        prop_assert!(close(after.trace(), before + total as f64, 1e-9));
        let moved: u32 = sh.steps.iter().map(|s| s.shift * s.block_size as u32).sum();
        prop_assert_eq!(moved, total);
        let eigs = eigenvalues(&after);
        for &x in &eigs {
            for &y in &eigs {
                let d = y - x;
                prop_assert!(d.re.round() < 1.0 || (d - d.re.round()).norm() > 1e-8);
            }
        }
    }

    #[test]
    fn monodromy_determinant_follows_the_trace(seed in any::<u64>(), t in -0.5..0.5f64) {
        // det M_i = exp(2 pi i tr B_i) for a loop around a simple pole
        let sys = random_fuchsian_system(&mut rng(seed), 2, integer_poles(3), 0.3);
        let ns = sys.at(&ParamPoint::real(&[t])).unwrap();
        let plan = PathPlan::default_for(&ns);
        let md = monodromy_numeric(&ns, &plan, 1e-10).unwrap();
        for (k, m) in md.poles.iter().zip(&md.matrices) {
            let tr = sys.poles()[*k].principal[0].eval(&ParamPoint::real(&[t])).unwrap().trace();
            let want = (c(0.0, 2.0 * PI) * tr).exp();
            prop_assert!((m.determinant() - want).norm() < 1e-8);
        }
    }

    #[test]
    fn detected_fractions_reproduce_the_function(
        num in proptest::collection::vec(coefficient(), 1..4),
        den in proptest::collection::vec(coefficient(), 1..4),
        seed in any::<u64>(),
    ) {
        let d = num.len().max(den.len()) - 1;
        let grid = [ParamPoint::real(&[0.2]), ParamPoint::real(&[-0.3])];
        let f = SampledFunction::rational(num.clone(), den.clone(), 0.05);
        let opts = DetectOptions { m_max: 4, seed, ..DetectOptions::default() };
        let v = detect_rational_in_x(&f, &grid, &opts).unwrap();
        let RationalVerdict::Rational { m, coefficients } = v else {
            return Err(TestCaseError::fail("not detected"));
        };
        prop_assert!(m <= d);
        for (fr, t) in coefficients.iter().zip(&grid) {
            prop_assert!(fr.residual <= 1e-8);
            for k in 0..8 {
                let x = Complex64::from_polar(0.5 + 0.1 * k as f64, k as f64);
                let ev = |cs: &[ParamRational]| cs.iter().rev().fold(c(0.0, 0.0), |acc, q| acc * x + q.eval(t).unwrap());
                let dx = ev(&den);
                if dx.norm() < 0.05 {
                    continue;
                }
                prop_assert!(close(fr.eval(x), ev(&num) / dx, 1e-7));
            }
        }
    }
}
