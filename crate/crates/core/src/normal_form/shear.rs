//! Shearing transformations removing positive-integer eigenvalue gaps of `A_0`.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::io::{complex_out, matrix_out};
use crate::linalg::{eigenvalues, reorder_schur, schur};
use crate::param::{Mat, ParamPoint};
use crate::series::NumericSeries;
use crate::{CMatrix, Complex64};

use super::{FuchsLocalSystem, EPS_INT};

/// Eigenvalues closer than this (times `1 + |lambda|`) form one cluster;
/// loose enough for the splitting of small Jordan blocks.
const EQ_TOL: f64 = 1e-5;
/// Gaps this close to an integer, but outside [`EPS_INT`], are ambiguous.
const AMBIGUOUS_TOL: f64 = 1e-6;
const MAX_ITERATIONS: usize = 64;

/// One shearing iteration: the eigenvalue cluster at `from` is moved up by
/// `shift` through `shift` unit shears, each preceded by a unitary change
/// of basis.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ShearStep {
    #[serde(serialize_with = "ser_complex")]
    pub from: Complex64,
    pub shift: u32,
    pub block_size: usize,
    #[serde(serialize_with = "ser_complex_list")]
    pub eigenvalues_before: Vec<Complex64>,
    #[serde(serialize_with = "ser_complex_list")]
    pub eigenvalues_after: Vec<Complex64>,
    pub max_gap_before: u32,
    pub max_gap_after: u32,
    /// `Q^H` for each unit shear, in application order.
    #[serde(serialize_with = "ser_matrices")]
    pub bases: Vec<CMatrix>,
}

impl ShearStep {
    pub fn basis(&self) -> CMatrix {
        self.bases[0].clone()
    }
}

fn ser_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    complex_out(*z).serialize(s)
}

fn ser_complex_list<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter()
        .map(|z| complex_out(*z))
        .collect::<Vec<_>>()
        .serialize(s)
}

fn ser_matrices<S: Serializer>(v: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(matrix_out).collect::<Vec<_>>().serialize(s)
}

/// Result of shearing: `Z = T Y` turns the input into `series`, whose `A_0`
/// has no positive-integer eigenvalue gaps.
#[derive(Clone, Debug)]
pub struct Shearing {
    pub steps: Vec<ShearStep>,
    pub series: NumericSeries,
    /// `T`, a polynomial in `u`.
    pub gauge: NumericSeries,
    /// `T^-1`, a Laurent polynomial in `u`.
    pub gauge_inv: NumericSeries,
    /// Eigenvalues of the original `A_0`.
    pub original: Vec<Complex64>,
    /// Total shift of each original eigenvalue.
    pub exponents: Vec<u32>,
}

impl Shearing {
    /// Number of unit shears applied; each costs one order of truncation.
    pub fn unit_steps(&self) -> u32 {
        self.steps.iter().map(|s| s.shift).sum()
    }
}

pub fn shearing(f: &FuchsLocalSystem, t0: &ParamPoint) -> Result<Shearing> {
    shear_numeric(&f.at(t0)?)
}

/// Clusters of numerically equal eigenvalues as `(mean, size)`.
fn clusters(eigs: &[Complex64]) -> Vec<(Complex64, usize)> {
    let scale = 1.0 + eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out: Vec<(Complex64, usize, Vec<Complex64>)> = Vec::new();
    for &z in eigs {
        match out
            .iter_mut()
            .find(|(_, _, m)| m.iter().any(|w| (w - z).norm() <= EQ_TOL * scale))
        {
            Some(c) => {
                c.2.push(z);
                c.1 += 1;
            }
            None => out.push((z, 1, vec![z])),
        }
    }
    out.into_iter()
        .map(|(_, k, m)| (m.iter().sum::<Complex64>() / k as f64, k))
        .collect()
}

/// `Some(k)` when `b - a` is the positive integer `k` within [`EPS_INT`].
fn integer_gap(a: Complex64, b: Complex64) -> Result<Option<u32>> {
    let d = b - a;
    let r = d.re.round();
    if r < 1.0 {
        return Ok(None);
    }
    let dist = (d - Complex64::new(r, 0.0)).norm();
    if dist <= EPS_INT {
        Ok(Some(r as u32))
    } else if dist <= AMBIGUOUS_TOL {
        Err(Error::EigenvalueClusterAmbiguity {
            gap: complex_out(d),
        })
    } else {
        Ok(None)
    }
}

/// Largest positive-integer gap between eigenvalues of `a0` (0 if none).
pub fn max_integer_gap(a0: &CMatrix) -> Result<u32> {
    let cl = clusters(&eigenvalues(a0));
    let mut best = 0;
    for &(a, _) in &cl {
        for &(b, _) in &cl {
            if let Some(k) = integer_gap(a, b)? {
                best = best.max(k);
            }
        }
    }
    Ok(best)
}

/// Sum of `k * size_a * size_b` over cluster pairs with positive integer gap
/// `k`. Every shear of the lowest member of a chain lowers it.
fn gap_weight(a0: &CMatrix) -> Result<u64> {
    let cl = clusters(&eigenvalues(a0));
    let mut w = 0;
    for &(a, ka) in &cl {
        for &(b, kb) in &cl {
            if let Some(k) = integer_gap(a, b)? {
                w += k as u64 * (ka * kb) as u64;
            }
        }
    }
    Ok(w)
}

/// The cluster to shift next: the lowest member of an integer-gap chain,
/// together with the gap to the next member above it.
fn next_shift(cl: &[(Complex64, usize)]) -> Result<Option<(Complex64, usize, u32)>> {
    let mut best: Option<(Complex64, usize, u32)> = None;
    for &(a, size) in cl {
        let mut up = None;
        let mut has_lower = false;
        for &(b, _) in cl {
            if let Some(k) = integer_gap(a, b)? {
                up = Some(up.map_or(k, |u: u32| u.min(k)));
            }
            if integer_gap(b, a)?.is_some() {
                has_lower = true;
            }
        }
        if let (Some(m), false) = (up, has_lower) {
            if best.is_none_or(|(c, _, _)| a.re < c.re) {
                best = Some((a, size, m));
            }
        }
    }
    Ok(best)
}

/// `Z = diag(u I_k, I) Q^H Y` applied to a delta-form series.
fn unit_shear(a: &NumericSeries, q: &CMatrix, k: usize) -> Result<NumericSeries> {
    let n = a.n();
    let qh = q.adjoint();
    let trunc = a.truncation();
    let conj: Vec<CMatrix> = (0..=trunc)
        .map(|i| &qh * a.coeff_or_zero(i).to_dmatrix() * q)
        .collect();
    let scale = conj[0].norm().max(1e-300);
    let w0 = conj[0].view((k, 0), (n - k, k)).norm();
    if w0 > 1e-8 * scale {
        return Err(Error::EigenvalueClusterAmbiguity {
            gap: [w0 / scale, 0.0],
        });
    }
    let new_trunc = if a.is_exact() { trunc + 1 } else { trunc - 1 };
    if new_trunc < 0 {
        return Err(Error::InsufficientTruncation {
            truncation: trunc,
            required: 1,
        });
    }
    let get = |i: i64| -> CMatrix {
        if i < 0 || i > trunc {
            CMatrix::zeros(n, n)
        } else {
            conj[i as usize].clone()
        }
    };
    let mut coeffs = Vec::with_capacity(new_trunc as usize + 1);
    for i in 0..=new_trunc {
        let cur = get(i);
        let prev = get(i - 1);
        let next = get(i + 1);
        let mut m = CMatrix::zeros(n, n);
        m.view_mut((0, 0), (k, k))
            .copy_from(&cur.view((0, 0), (k, k)));
        if i == 0 {
            for d in 0..k {
                m[(d, d)] += Complex64::new(1.0, 0.0);
            }
        }
        m.view_mut((0, k), (k, n - k))
            .copy_from(&prev.view((0, k), (k, n - k)));
        m.view_mut((k, 0), (n - k, k))
            .copy_from(&next.view((k, 0), (n - k, k)));
        m.view_mut((k, k), (n - k, n - k))
            .copy_from(&cur.view((k, k), (n - k, n - k)));
        coeffs.push(Mat::from_dmatrix(&m));
    }
    if a.is_exact() {
        NumericSeries::exact(*a.center(), 0, coeffs)
    } else {
        NumericSeries::new(*a.center(), 0, coeffs)
    }
}

fn shear_factors(center: Complex64, n: usize, k: usize) -> (NumericSeries, NumericSeries) {
    let proj = |lo: usize, hi: usize| {
        Mat::from_fn(n, |i, j| {
            if i == j && i >= lo && i < hi {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    let s = NumericSeries::exact(center, 0, vec![proj(k, n), proj(0, k)]).expect("nonempty");
    let s_inv = NumericSeries::exact(center, -1, vec![proj(0, k), proj(k, n)]).expect("nonempty");
    (s, s_inv)
}

fn spectra_match(got: &[Complex64], want: &[Complex64]) -> bool {
    let scale = 1.0 + want.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut used = vec![false; want.len()];
    for g in got {
        let hit = want
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| (a.1 - g).norm().total_cmp(&(b.1 - g).norm()));
        match hit {
            Some((i, w)) if (w - g).norm() <= 1e-4 * scale => used[i] = true,
            _ => return false,
        }
    }
    true
}

pub(crate) fn shear_numeric(a: &NumericSeries) -> Result<Shearing> {
    let n = a.n();
    let center = *a.center();
    let mut cur = a.clone();
    let original = eigenvalues(&cur.coeff_or_zero(0).to_dmatrix());
    let mut values = original.clone();
    let mut exponents = vec![0u32; n];
    let id = Mat::identity(n);
    let mut gauge = NumericSeries::constant(center, id.clone());
    let mut gauge_inv = NumericSeries::constant(center, id);
    let mut steps = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let a0 = cur.coeff_or_zero(0).to_dmatrix();
        let before = eigenvalues(&a0);
        let gap_before = max_integer_gap(&a0)?;
        let weight_before = gap_weight(&a0)?;
        let Some((from, size, m)) = next_shift(&clusters(&before))? else {
            return Ok(Shearing {
                steps,
                series: cur,
                gauge,
                gauge_inv,
                original,
                exponents,
            });
        };
        let mut bases = Vec::with_capacity(m as usize);
        for s in 0..m {
            let target = from + Complex64::new(s as f64, 0.0);
            let tol = EQ_TOL * (1.0 + target.norm());
            let (mut q, mut tri) = schur(&cur.coeff_or_zero(0).to_dmatrix());
            reorder_schur(&mut q, &mut tri, |z| usize::from((z - target).norm() > tol));
            let k = (0..n)
                .filter(|&i| (tri[(i, i)] - target).norm() <= tol)
                .count();
            if k != size {
                return Err(Error::EigenvalueClusterAmbiguity {
                    gap: complex_out(Complex64::new(s as f64, 0.0)),
                });
            }
            cur = unit_shear(&cur, &q, k)?;
            let qs = NumericSeries::constant(center, Mat::from_dmatrix(&q));
            let qhs = NumericSeries::constant(center, Mat::from_dmatrix(&q.adjoint()));
            let (sf, sf_inv) = shear_factors(center, n, k);
            gauge = sf.mul(&qhs.mul(&gauge)?)?;
            gauge_inv = gauge_inv.mul(&qs)?.mul(&sf_inv)?;
            bases.push(q.adjoint());
        }
        let scale = 1.0 + values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (v, e) in values.iter_mut().zip(exponents.iter_mut()) {
            if (*v - from).norm() <= EQ_TOL * scale {
                *v += Complex64::new(m as f64, 0.0);
                *e += m;
            }
        }
        let a0 = cur.coeff_or_zero(0).to_dmatrix();
        let after = eigenvalues(&a0);
        let gap_after = max_integer_gap(&a0)?;
        if !spectra_match(&after, &values) || gap_weight(&a0)? >= weight_before {
            return Err(Error::EigenvalueClusterAmbiguity {
                gap: complex_out(Complex64::new(m as f64, 0.0)),
            });
        }
        steps.push(ShearStep {
            from,
            shift: m,
            block_size: size,
            eigenvalues_before: before,
            eigenvalues_after: after,
            max_gap_before: gap_before,
            max_gap_after: gap_after,
            bases,
        });
    }
    Err(Error::EigenvalueClusterAmbiguity {
        gap: [f64::NAN, 0.0],
    })
}
