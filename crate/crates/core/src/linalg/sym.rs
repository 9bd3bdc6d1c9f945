use serde::{Deserialize, Serialize};

use super::check_len;
use crate::error::{Error, Result};

/// Symmetric `d x d` matrix stored as its packed lower triangle, row by row:
/// entry `(i, j)` with `j <= i` lives at `i * (i + 1) / 2 + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrixLower {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrixLower {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// Takes the lower triangle of a row-major `dim x dim` matrix.
    pub fn from_full(dim: usize, full: &[f64]) -> Result<Self> {
        check_len(dim * dim, full.len())?;
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.packed[packed_index(i, j)] = full[i * dim + j];
            }
        }
        Ok(m)
    }

    pub fn from_packed(dim: usize, packed: Vec<f64>) -> Result<Self> {
        check_len(dim * (dim + 1) / 2, packed.len())?;
        Ok(Self { dim, packed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    /// `self += x x^T`, lower triangle only.
    pub fn rank_one_update(&mut self, x: &[f64]) -> Result<()> {
        check_len(self.dim, x.len())?;
        self.rank_one_unchecked(1.0, x);
        Ok(())
    }

    /// `self += w x x^T`, lower triangle only.
    pub fn rank_one_update_scaled(&mut self, weight: f64, x: &[f64]) -> Result<()> {
        check_len(self.dim, x.len())?;
        self.rank_one_unchecked(weight, x);
        Ok(())
    }

    #[inline]
    fn rank_one_unchecked(&mut self, weight: f64, x: &[f64]) {
        let mut start = 0;
        for (i, &xi) in x.iter().enumerate() {
            let wxi = weight * xi;
            let row = &mut self.packed[start..start + i + 1];
            for (m, &xj) in row.iter_mut().zip(&x[..=i]) {
                *m += wxi * xj;
            }
            start += i + 1;
        }
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::dim(self.dim, other.dim));
        }
        for (a, b) in self.packed.iter_mut().zip(&other.packed) {
            *a += b;
        }
        Ok(())
    }

    /// Row-major full matrix.
    pub fn to_full(&self) -> Vec<f64> {
        let d = self.dim;
        let mut full = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = self.packed[packed_index(i, j)];
                full[i * d + j] = v;
                full[j * d + i] = v;
            }
        }
        full
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, v.len())?;
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            let row = &self.packed[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            for (j, &m) in row.iter().enumerate() {
                out[i] += m * v[j];
                if j != i {
                    out[j] += m * v[i];
                }
            }
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|v| v.is_finite())
    }
}
