use serde::{Deserialize, Serialize};

use crate::Complex64;

/// A point `t = (t_1, ..., t_r)` in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamPoint(pub Vec<Complex64>);

impl ParamPoint {
    pub fn new(coords: Vec<Complex64>) -> Self {
        ParamPoint(coords)
    }

    /// A point with real coordinates.
    pub fn real(coords: &[f64]) -> Self {
        ParamPoint(coords.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    /// Copy of this point with coordinate `k` moved by `h`.
    pub fn shifted(&self, k: usize, h: Complex64) -> Self {
        let mut c = self.0.clone();
        c[k] += h;
        ParamPoint(c)
    }

    pub(crate) fn pairs(&self) -> Vec<[f64; 2]> {
        self.0.iter().map(|z| [z.re, z.im]).collect()
    }
}
