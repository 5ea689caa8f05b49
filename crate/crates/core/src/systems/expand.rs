//! Laurent expansions of the rational building blocks `(x - b)^k` at a
//! finite point or at infinity.

use crate::error::Result;
use crate::param::{Coeff, Mat};
use crate::series::MatrixLaurentSeries;

/// Where an expansion is taken.
#[derive(Clone, Debug)]
pub(crate) enum At<E> {
    /// Powers of `u = x - a`.
    Finite(E),
    /// Powers of `w = 1/x`.
    Infinity,
}

/// Generalized binomial coefficient `C(k, j)` for integer `k`, `j >= 0`.
pub(crate) fn binomial(k: i64, j: i64) -> f64 {
    let mut acc = 1.0;
    for i in 0..j {
        acc *= (k - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Expansion of `(x - base)^k` at `at` through `order`, as `(low, coeffs)`.
///
/// `same` tells the routine that `at` coincides with `base` (the caller
/// decides, since rational centers are compared structurally).
pub(crate) fn power_expansion<E: Coeff>(
    base: &E,
    k: i64,
    at: &At<E>,
    same: bool,
    order: i64,
) -> Result<(i64, Vec<E>)> {
    match at {
        At::Finite(a) => {
            if same {
                let len = (order - k + 1).max(1) as usize;
                let mut v = vec![E::zero(); len];
                v[0] = E::one();
                return Ok((k, v));
            }
            // (u + d)^k = sum_j C(k, j) d^(k-j) u^j with d = a - base
            let d = a.minus(base);
            let d_inv = d.recip()?;
            let dk = pow(&d, &d_inv, k);
            let mut out = Vec::new();
            let mut dpow = dk;
            for j in 0..=order.max(0) {
                let cj = binomial(k, j);
                if k >= 0 && j > k {
                    out.push(E::zero());
                } else {
                    out.push(dpow.times(&E::from_complex(crate::Complex64::new(cj, 0.0))));
                }
                dpow = dpow.times(&d_inv);
            }
            Ok((0, out))
        }
        At::Infinity => {
            // (x - b)^k = w^-k (1 - b w)^k = sum_j C(k, j) (-b)^j w^(j - k)
            let mb = base.negate();
            let mut out = Vec::new();
            let mut bpow = E::one();
            for j in 0..=(order + k).max(0) {
                if k >= 0 && j > k {
                    out.push(E::zero());
                } else {
                    out.push(
                        bpow.times(&E::from_complex(crate::Complex64::new(binomial(k, j), 0.0))),
                    );
                }
                bpow = bpow.times(&mb);
            }
            Ok((-k, out))
        }
    }
}

fn pow<E: Coeff>(d: &E, d_inv: &E, k: i64) -> E {
    let base = if k < 0 { d_inv } else { d };
    let mut acc = E::one();
    for _ in 0..k.unsigned_abs() {
        acc = acc.times(base);
    }
    acc
}

/// Accumulates `sum M_k * (scalar series)_k` into one matrix series over a
/// fixed order range `low..=high`.
pub(crate) struct Accumulator<E> {
    low: i64,
    coeffs: Vec<Mat<E>>,
}

impl<E: Coeff> Accumulator<E> {
    pub fn new(n: usize, low: i64, high: i64) -> Self {
        Accumulator {
            low,
            coeffs: vec![Mat::zeros(n); (high - low + 1).max(1) as usize],
        }
    }

    pub fn high(&self) -> i64 {
        self.low + self.coeffs.len() as i64 - 1
    }

    pub fn add_scaled(&mut self, m: &Mat<E>, low: i64, scalars: &[E]) {
        for (j, s) in scalars.iter().enumerate() {
            let order = low + j as i64;
            if order < self.low || order > self.high() || s.is_zero() {
                continue;
            }
            let slot = &mut self.coeffs[(order - self.low) as usize];
            *slot = slot.plus(&m.scale(s));
        }
    }

    pub fn finish(self, center: E, exact: bool) -> MatrixLaurentSeries<E> {
        let s = MatrixLaurentSeries::new(center.clone(), self.low, self.coeffs)
            .expect("nonempty accumulator");
        if exact {
            MatrixLaurentSeries::exact(center, s.low_order(), s.coeffs().to_vec())
                .expect("same data")
        } else {
            s
        }
    }
}

/// Re-expand an exact Laurent polynomial in `(x - c)` at another point.
pub(crate) fn reexpand<E: Coeff>(
    p: &MatrixLaurentSeries<E>,
    at: &At<E>,
    same: bool,
    order: i64,
) -> Result<MatrixLaurentSeries<E>> {
    debug_assert!(p.is_exact());
    let c = p.center().clone();
    if same {
        return Ok(p.padded(order));
    }
    let low = match at {
        At::Finite(_) => 0,
        At::Infinity => -p.truncation(),
    };
    let mut acc = Accumulator::new(p.n(), low.min(order), order);
    let all_nonneg = p.low_order() >= 0;
    for (idx, m) in p.coeffs().iter().enumerate() {
        if m.is_zero() {
            continue;
        }
        let k = p.low_order() + idx as i64;
        let (l, v) = power_expansion(&c, k, at, false, order)?;
        acc.add_scaled(m, l, &v);
    }
    let center = match at {
        At::Finite(a) => a.clone(),
        At::Infinity => E::zero(),
    };
    // polynomials re-expanded at a finite point stay exact
    let exact = all_nonneg && matches!(at, At::Finite(_)) && order >= p.truncation();
    Ok(acc.finish(center, exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn geometric_expansion_of_simple_pole() {
        // 1/(x - 1) at 0 = -(1 + x + x^2 + ...)
        let (low, v) = power_expansion(&c(1.0), -1, &At::Finite(c(0.0)), false, 3).unwrap();
        assert_eq!(low, 0);
        for z in v {
            assert!((z - c(-1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn binomial_at_infinity() {
        // (x - 2)^2 = x^2 - 4x + 4 -> w^-2 - 4 w^-1 + 4
        let (low, v) = power_expansion(&c(2.0), 2, &At::Infinity, false, 2).unwrap();
        assert_eq!(low, -2);
        assert_eq!(&v[..3], &[c(1.0), c(-4.0), c(4.0)]);
        // 1/(x - 2) = w + 2 w^2 + 4 w^3
        let (low, v) = power_expansion(&c(2.0), -1, &At::Infinity, false, 3).unwrap();
        assert_eq!(low, 1);
        assert_eq!(&v[..3], &[c(1.0), c(2.0), c(4.0)]);
    }

    #[test]
    fn generalized_binomial() {
        assert_eq!(binomial(-2, 3), -4.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(2, 3), 0.0);
    }
}
