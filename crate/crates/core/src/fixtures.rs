//! Reference systems and seeded random generators used by tests, benches
//! and the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::normal_form::FuchsLocalSystem;
use crate::param::{Mat, ParamMatrix, ParamRational};
use crate::series::ParamSeries;
use crate::systems::{GaugeTransform, LinearSystem, Pole};
use crate::{CMatrix, Complex64};

/// The worked 2x2 example: `A` with a double pole at `x = t`, the gauge `P`
/// and the simple system `B = diag(t-1, t-1)/(x-t)`.
pub fn worked_example() -> (LinearSystem, LinearSystem, GaugeTransform) {
    let t = ParamRational::var(0);
    let r = ParamRational::real;
    let z = ParamRational::zero;
    let m = |rows: Vec<Vec<ParamRational>>| Mat::from_rows(rows).unwrap();
    let a = LinearSystem::new(
        2,
        1,
        vec![Pole {
            alpha: t.clone(),
            principal: vec![
                m(vec![vec![z(), r(-3.0)], vec![z(), z()]]),
                m(vec![vec![t.clone(), z()], vec![z(), &t - &r(2.0)]]),
            ],
        }],
        vec![],
    )
    .unwrap();
    let tm1 = &t - &r(1.0);
    let b = LinearSystem::fuchsian(
        1,
        vec![t.clone()],
        vec![m(vec![vec![tm1.clone(), z()], vec![z(), tm1]])],
    )
    .unwrap();
    let p = ParamSeries::exact(
        t,
        -2,
        vec![
            m(vec![vec![z(), r(-1.0)], vec![z(), z()]]),
            m(vec![vec![r(1.0), z()], vec![z(), z()]]),
            Mat::zeros(2),
            m(vec![vec![z(), z()], vec![z(), r(1.0)]]),
        ],
    )
    .unwrap();
    (a, b, GaugeTransform::new(p).unwrap())
}

/// Generator used by every randomized fixture.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in the square `[-1, 1] + i [-1, 1]`.
pub fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random `n x n` matrix with Frobenius norm `norm`.
pub fn random_matrix(rng: &mut impl Rng, n: usize, norm: f64) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| random_complex(rng));
    let f = m.norm();
    if f == 0.0 {
        m
    } else {
        m * Complex64::new(norm / f, 0.0)
    }
}

/// `C + t D` for constant `C`, `D`.
fn affine_in_t(c: &CMatrix, d: &CMatrix) -> ParamMatrix {
    Mat::constant(c).plus(&Mat::constant(d).scale(&ParamRational::var(0)))
}

/// Fuchsian system in one parameter `t` with poles `alphas` and residues
/// `B_i(t) = C_i + t D_i` summing to zero, so infinity is an ordinary point.
/// For `|t| <= 1/2` every residue has Frobenius norm, hence spectral
/// radius, at most `radius`.
pub fn random_fuchsian_system(
    rng: &mut impl Rng,
    n: usize,
    alphas: Vec<ParamRational>,
    radius: f64,
) -> LinearSystem {
    let s = alphas.len();
    assert!(s >= 2, "need at least two poles");
    let each = radius / (s - 1) as f64;
    let mut residues = Vec::with_capacity(s);
    let mut sum = Mat::zeros(n);
    for _ in 0..s - 1 {
        let c = {
            let k = rng.gen_range(0.5..1.0);
            random_matrix(rng, n, 0.5 * each * k)
        };
        let d = {
            let k = rng.gen_range(0.5..1.0);
            random_matrix(rng, n, 0.5 * each * k)
        };
        let b = affine_in_t(&c, &d);
        sum = sum.plus(&b);
        residues.push(b);
    }
    residues.push(sum.negate());
    LinearSystem::fuchsian(1, alphas, residues).expect("distinct poles")
}

/// Constant poles `0, 1, ..., s - 1`.
pub fn integer_poles(s: usize) -> Vec<ParamRational> {
    (0..s).map(|k| ParamRational::real(k as f64)).collect()
}

/// Local system `delta Y = (A_0 + u A_1 + ... + u^order A_order) Y` around
/// `u = 0`, coefficients affine in `t`, with `A_0` of norm at most 0.4 for
/// `|t| <= 1/2`: eigenvalue differences stay below one, so it is
/// non-resonant.
pub fn random_local_system(rng: &mut impl Rng, n: usize, order: usize) -> FuchsLocalSystem {
    let mut coeffs = Vec::with_capacity(order + 1);
    for i in 0..=order {
        let scale = if i == 0 { 0.2 } else { 1.0 };
        let c = {
            let k = rng.gen_range(0.5..1.0);
            random_matrix(rng, n, scale * k)
        };
        let d = {
            let k = rng.gen_range(0.5..1.0);
            random_matrix(rng, n, scale * k)
        };
        coeffs.push(affine_in_t(&c, &d));
    }
    let series = ParamSeries::exact(ParamRational::zero(), 0, coeffs).expect("nonempty");
    FuchsLocalSystem::new(series).expect("A0 is nonzero")
}

/// `A_0 = V diag(lambda) V^-1` whose eigenvalues form integer chains with
/// gaps in `{1, 2, 3}`, plus random higher coefficients through `order`.
/// Returns the system and the planted eigenvalues.
pub fn planted_gap_system(
    rng: &mut impl Rng,
    n: usize,
    order: usize,
) -> (FuchsLocalSystem, Vec<Complex64>) {
    assert!(n >= 2);
    let base = random_complex(rng) * 0.3;
    let mut eigs = vec![base];
    let mut fresh = 0;
    for j in 1..n {
        if j == 1 || rng.gen_bool(0.75) {
            let from = eigs[rng.gen_range(0..j)];
            let gap = rng.gen_range(1..=3);
            eigs.push(from + gap as f64);
        } else {
            // imaginary offset keeps it off every integer chain
            fresh += 1;
            let re = rng.gen_range(-0.5..0.5);
            eigs.push(base + Complex64::new(re, 0.2 * fresh as f64 + 0.1));
        }
    }
    let v = CMatrix::identity(n, n) + random_matrix(rng, n, 0.4);
    let vinv = v.clone().try_inverse().expect("near identity");
    let a0 = &v * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigs.clone())) * vinv;
    let mut coeffs = vec![a0];
    for _ in 0..order {
        coeffs.push(random_matrix(rng, n, 1.0));
    }
    let f = FuchsLocalSystem::from_matrices(Complex64::new(0.0, 0.0), &coeffs, true)
        .expect("A0 is nonzero");
    (f, eigs)
}
