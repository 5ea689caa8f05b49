use crate::error::{Error, Result};
use crate::param::{Coeff, ParamPoint, ParamRational};
use crate::{CMatrix, Complex64};

/// Square matrix over a coefficient domain, stored row-major.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat<E> {
    n: usize,
    data: Vec<E>,
}

/// Matrix of rational functions of the parameters.
pub type ParamMatrix = Mat<ParamRational>;

impl<E: Coeff> Mat<E> {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![E::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, E::one())
    }

    pub fn scalar(n: usize, c: E) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c.clone();
        }
        m
    }

    pub fn diagonal(d: Vec<E>) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, c) in d.into_iter().enumerate() {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<E>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "matrix must have at least one row".into(),
            ));
        }
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::InvalidInput(format!(
                    "matrix row has {} entries, expected {n}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(Mat { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[E]> {
        self.data.chunks(self.n)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Coeff::is_zero)
    }

    pub fn map<F: Coeff>(&self, f: impl Fn(&E) -> F) -> Mat<F> {
        Mat {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn plus(&self, o: &Self) -> Self {
        debug_assert_eq!(self.n, o.n);
        Mat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.plus(b))
                .collect(),
        }
    }

    pub fn minus(&self, o: &Self) -> Self {
        Mat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.minus(b))
                .collect(),
        }
    }

    pub fn negate(&self) -> Self {
        self.map(Coeff::negate)
    }

    pub fn scale(&self, s: &E) -> Self {
        self.map(|a| a.times(s))
    }

    pub fn times(&self, o: &Self) -> Self {
        debug_assert_eq!(self.n, o.n);
        let n = self.n;
        Mat::from_fn(n, |i, j| {
            let mut acc = E::zero();
            for k in 0..n {
                let a = &self.data[i * n + k];
                let b = &o.data[k * n + j];
                if !a.is_zero() && !b.is_zero() {
                    acc = acc.plus(&a.times(b));
                }
            }
            acc
        })
    }

    pub fn eval(&self, t: &ParamPoint) -> Result<CMatrix> {
        let vals = self
            .data
            .iter()
            .map(|e| e.value_at(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(CMatrix::from_row_slice(self.n, self.n, &vals))
    }

    /// Exact inverse by Gauss-Jordan elimination; pivots are chosen by
    /// magnitude at the working point `t`.
    pub fn inverse_at(&self, t: &ParamPoint) -> Result<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self
            .data
            .iter()
            .map(|e| e.value_at(t).map(|v| v.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0_f64, f64::max);
        for col in 0..n {
            let mut best = (col, -1.0);
            for r in col..n {
                let v = a.get(r, col).value_at(t)?.norm();
                if v > best.1 {
                    best = (r, v);
                }
            }
            if best.1 <= 1e-12 * scale.max(1e-300) || a.get(best.0, col).is_zero() {
                return Err(Error::SingularMatrix);
            }
            a.swap_rows(col, best.0);
            inv.swap_rows(col, best.0);
            let p = a.get(col, col).recip()?;
            for j in 0..n {
                let v = a.get(col, j).times(&p);
                a.set(col, j, v);
                let w = inv.get(col, j).times(&p);
                inv.set(col, j, w);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                for j in 0..n {
                    let v = a.get(r, j).minus(&f.times(a.get(col, j)));
                    a.set(r, j, v);
                    let w = inv.get(r, j).minus(&f.times(inv.get(col, j)));
                    inv.set(r, j, w);
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.n {
            self.data.swap(a * self.n + j, b * self.n + j);
        }
    }
}

impl Mat<Complex64> {
    pub fn to_dmatrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn from_dmatrix(m: &CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "square matrix expected");
        Mat::from_fn(m.nrows(), |i, j| m[(i, j)])
    }
}

impl ParamMatrix {
    /// Constant matrix with the given complex entries.
    pub fn constant(m: &CMatrix) -> Self {
        Mat::from_fn(m.nrows(), |i, j| ParamRational::constant(m[(i, j)]))
    }
}
