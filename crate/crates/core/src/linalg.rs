//! Dense square complex matrices, just enough for affine maps and rotations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CVec;

/// Row-major square matrix. Serialized as a list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Complex64>>", into = "Vec<Vec<Complex64>>")]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl TryFrom<Vec<Vec<Complex64>>> for CMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        CMatrix::from_rows(rows)
    }
}

impl From<CMatrix> for Vec<Vec<Complex64>> {
    fn from(m: CMatrix) -> Self {
        m.data.chunks(m.n).map(|r| r.to_vec()).collect()
    }
}

impl CMatrix {
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("matrix has no rows"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                left: n,
                right: r.len(),
            });
        }
        let data: Vec<Complex64> = rows.into_iter().flatten().collect();
        if data.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        Ok(CMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        CMatrix { n, data }
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        let mut m = CMatrix::identity(d.len());
        for (i, v) in d.iter().enumerate() {
            m.data[i * m.n + i] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        assert_eq!(v.dim(), self.n, "dimension mismatch");
        let x = v.coords();
        let out = (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        CVec::new(out).expect("finite product")
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        CMatrix { n, data }
    }

    pub fn mul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        CMatrix { n, data }
    }

    /// `max |(U* U - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().mul(self);
        let id = CMatrix::identity(self.n);
        g.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
