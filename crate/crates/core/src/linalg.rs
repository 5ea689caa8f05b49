//! Dense complex linear algebra shared by the normal-form, continuation and
//! inverse-monodromy code.

use nalgebra::linalg::Schur;

use crate::error::{Error, Result};
use crate::{CMatrix, Complex64};

const TWO_PI: f64 = std::f64::consts::TAU;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex Schur form `M = Q T Q^H` with `T` upper triangular.
pub fn schur(m: &CMatrix) -> (CMatrix, CMatrix) {
    let (q, mut t) = Schur::new(m.clone()).unpack();
    for j in 0..t.ncols() {
        for i in (j + 1)..t.nrows() {
            t[(i, j)] = c(0.0, 0.0);
        }
    }
    (q, t)
}

pub fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    let (_, t) = schur(m);
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

pub fn spectral_radius(m: &CMatrix) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Swap the adjacent diagonal entries `k` and `k+1` of an upper triangular
/// `t`, updating the Schur vectors `q`.
fn swap_adjacent(q: &mut CMatrix, t: &mut CMatrix, k: usize) {
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let v1 = t[(k, k + 1)];
    let v2 = b - a;
    let norm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if norm == 0.0 {
        return;
    }
    let (v1, v2) = (v1 / norm, v2 / norm);
    // unitary with first column (v1, v2)
    let mut u = CMatrix::identity(t.nrows(), t.ncols());
    u[(k, k)] = v1;
    u[(k + 1, k)] = v2;
    u[(k, k + 1)] = -v2.conj();
    u[(k + 1, k + 1)] = v1.conj();
    *t = u.adjoint() * &*t * &u;
    *q = &*q * u;
    t[(k + 1, k)] = c(0.0, 0.0);
    t[(k, k)] = b;
    t[(k + 1, k + 1)] = a;
}

/// Reorder a Schur form so that diagonal entries come in the order given by
/// `rank` (stable bubble sort on adjacent swaps).
pub fn reorder_schur(q: &mut CMatrix, t: &mut CMatrix, rank: impl Fn(Complex64) -> usize) {
    let n = t.nrows();
    if n < 2 {
        return;
    }
    loop {
        let mut swapped = false;
        for k in 0..n - 1 {
            if rank(t[(k, k)]) > rank(t[(k + 1, k + 1)]) {
                swap_adjacent(q, t, k);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
}

/// Solve `A X - X B = C` through the Kronecker linearization
/// `(I kron A - B^T kron I) vec(X) = vec(C)`.
pub fn sylvester_kron(a: &CMatrix, b: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    let p = a.nrows();
    let q = b.nrows();
    let dim = p * q;
    let mut k = CMatrix::zeros(dim, dim);
    for j in 0..q {
        for i in 0..p {
            let row = j * p + i;
            for l in 0..p {
                k[(row, j * p + l)] += a[(i, l)];
            }
            for l in 0..q {
                k[(row, l * p + i)] -= b[(l, j)];
            }
        }
    }
    let scale = k.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let lu = k.lu();
    let u = lu.u();
    let min_pivot = (0..dim)
        .map(|i| u[(i, i)].norm())
        .fold(f64::INFINITY, f64::min);
    if min_pivot <= 1e-13 * scale {
        return Err(Error::SingularMatrix);
    }
    let vec_c = CMatrix::from_iterator(dim, 1, rhs.iter().copied());
    let x = lu.solve(&vec_c).ok_or(Error::SingularMatrix)?;
    Ok(CMatrix::from_iterator(p, q, x.iter().copied()))
}

pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

/// Principal square root of an upper triangular matrix.
fn sqrtm_upper(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Principal logarithm of an upper triangular matrix whose eigenvalues are
/// off the closed negative real axis (inverse scaling and squaring with a
/// Gregory series).
fn logm_upper_principal(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let id = CMatrix::identity(n, n);
    let mut r = t.clone();
    let mut squarings = 0;
    while (&r - &id).norm() > 0.2 && squarings < 64 {
        r = sqrtm_upper(&r);
        squarings += 1;
    }
    let x = &r - &id;
    let mut term = x.clone();
    let mut acc = CMatrix::zeros(n, n);
    for k in 1..200 {
        let add = &term / c(k as f64, 0.0);
        if k % 2 == 1 {
            acc += &add;
        } else {
            acc -= &add;
        }
        if add.norm() < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
        term = &term * &x;
    }
    acc * c(2f64.powi(squarings), 0.0)
}

/// Group eigenvalues into clusters of nearby values (single linkage,
/// relative radius `rel`).
pub fn cluster_eigenvalues(eigs: &[Complex64], rel: f64) -> Vec<usize> {
    let n = eigs.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        l[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = eigs[i].norm().max(eigs[j].norm());
            if (eigs[i] - eigs[j]).norm() <= rel * scale {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    // relabel densely in order of first appearance
    let mut dense = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = vec![0; n];
    for i in 0..n {
        let r = find(&mut label, i);
        if dense[r] == usize::MAX {
            dense[r] = next;
            next += 1;
        }
        out[i] = dense[r];
    }
    out
}

/// Matrix logarithm built as a primary matrix function whose branch is
/// chosen per eigenvalue cluster.
///
/// `branch(mean)` receives the mean eigenvalue of a cluster and returns the
/// logarithm value to use for it (a branch of `log(mean)`); the cluster's
/// block then gets `branch(mean) I + log_principal(T_block / mean)`.
pub fn logm_with_branches(
    m: &CMatrix,
    branch: impl Fn(Complex64) -> Result<Complex64>,
) -> Result<CMatrix> {
    let n = m.nrows();
    let (mut q, mut t) = schur(m);
    let eigs: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    if eigs.iter().any(|z| z.norm() == 0.0) {
        return Err(Error::SingularMatrix);
    }
    let labels = cluster_eigenvalues(&eigs, 0.1);
    let nclusters = labels.iter().max().map_or(0, |&x| x + 1);
    let mut means = vec![c(0.0, 0.0); nclusters];
    let mut counts = vec![0usize; nclusters];
    for (z, &l) in eigs.iter().zip(&labels) {
        means[l] += z;
        counts[l] += 1;
    }
    for (mean, &cnt) in means.iter_mut().zip(&counts) {
        *mean /= cnt as f64;
    }
    let rank = |z: Complex64| {
        // nearest cluster mean decides the block
        means
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm()))
            .map(|(k, _)| k)
            .unwrap_or(0)
    };
    reorder_schur(&mut q, &mut t, rank);
    // block boundaries
    let mut blocks: Vec<(usize, usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || rank(t[(i, i)]) != rank(t[(start, start)]) {
            blocks.push((start, i, rank(t[(start, start)])));
            start = i;
        }
    }
    let mut f = CMatrix::zeros(n, n);
    for &(s, e, k) in &blocks {
        let mu = means[k];
        let lb = branch(mu)?;
        let tb = t.view((s, s), (e - s, e - s)).clone_owned() / mu;
        let mut fb = logm_upper_principal(&tb);
        for i in 0..(e - s) {
            fb[(i, i)] += lb;
        }
        f.view_mut((s, s), (e - s, e - s)).copy_from(&fb);
    }
    // block Parlett recurrence for the off-diagonal blocks
    let nb = blocks.len();
    for d in 1..nb {
        for bi in 0..nb - d {
            let bj = bi + d;
            let (si, ei, _) = blocks[bi];
            let (sj, ej, _) = blocks[bj];
            let tii = t.view((si, si), (ei - si, ei - si)).clone_owned();
            let tjj = t.view((sj, sj), (ej - sj, ej - sj)).clone_owned();
            let tij = t.view((si, sj), (ei - si, ej - sj)).clone_owned();
            let fii = f.view((si, si), (ei - si, ei - si)).clone_owned();
            let fjj = f.view((sj, sj), (ej - sj, ej - sj)).clone_owned();
            let mut rhs = &fii * &tij - &tij * &fjj;
            for bk in (bi + 1)..bj {
                let (sk, ek, _) = blocks[bk];
                let fik = f.view((si, sk), (ei - si, ek - sk)).clone_owned();
                let tkj = t.view((sk, sj), (ek - sk, ej - sj)).clone_owned();
                let tik = t.view((si, sk), (ei - si, ek - sk)).clone_owned();
                let fkj = f.view((sk, sj), (ek - sk, ej - sj)).clone_owned();
                rhs += &fik * &tkj - &tik * &fkj;
            }
            let fij = sylvester_kron(&tii, &tjj, &rhs)?;
            f.view_mut((si, sj), (ei - si, ej - sj)).copy_from(&fij);
        }
    }
    Ok(&q * f * q.adjoint())
}

/// `exp(2 pi i N)`.
pub fn exp_two_pi_i(n: &CMatrix) -> CMatrix {
    expm(&(n * c(0.0, TWO_PI)))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
